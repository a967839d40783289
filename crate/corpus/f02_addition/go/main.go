package main

import (
	"encoding/json"
	"os"
)

func handler(event map[string]any) map[string]any {
	a, _ := event["a"].(float64)
	b, _ := event["b"].(float64)
	return map[string]any{"result": a + b}
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
