package main

import (
	"encoding/json"
	"os"
	"fmt"
)

func handler(event map[string]any) map[string]any {
	name, _ := event["name"].(string)
	if name == "" {
		name = "World"
	}
	return map[string]any{"message": fmt.Sprintf("Hello, %s!", name)}
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
