package main

import (
	"encoding/json"
	"os"
	"fmt"
	"sort"
	"strings"
)

func handler(event map[string]any) map[string]any {
	user, _ := event["user"].(map[string]any)
	errors := []string{}
	name, _ := user["name"].(string)
	name = strings.TrimSpace(name)
	if name == "" {
		errors = append(errors, "name is required")
	}
	email, _ := user["email"].(string)
	email = strings.ToLower(strings.TrimSpace(email))
	local, domain, _ := strings.Cut(email, "@")
	if local == "" || !strings.Contains(domain, ".") {
		errors = append(errors, "email is invalid")
	}
	address, _ := user["address"].(map[string]any)
	city, _ := address["city"].(string)
	zip := ""
	switch z := address["zip"].(type) {
	case string:
		zip = z
	case float64:
		zip = fmt.Sprint(int64(z))
	}
	digits := len(zip) == 5
	for _, r := range zip {
		if r < '0' || r > '9' {
			digits = false
		}
	}
	if !digits {
		errors = append(errors, "zip must have 5 digits")
	}
	if age, ok := user["age"].(float64); ok && (age < 0 || age > 150) {
		errors = append(errors, "age out of range")
	}
	set := map[string]bool{}
	raw, _ := user["tags"].([]any)
	for _, t := range raw {
		s, _ := t.(string)
		if s = strings.ToLower(strings.TrimSpace(s)); s != "" {
			set[s] = true
		}
	}
	tags := []string{}
	for t := range set {
		tags = append(tags, t)
	}
	sort.Strings(tags)
	return map[string]any{
		"valid":  len(errors) == 0,
		"errors": errors,
		"user":   map[string]any{"name": name, "email": email, "city": city, "zip": zip, "tags": tags},
	}
}

func main() {
	var event map[string]any
	if err := json.NewDecoder(os.Stdin).Decode(&event); err != nil {
		os.Exit(1)
	}
	out, err := json.Marshal(handler(event))
	if err != nil {
		os.Exit(1)
	}
	os.Stdout.Write(append(out, '\n'))
}
