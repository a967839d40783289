package main

import (
	"encoding/json"
	"os"
	"fmt"
)

func handler(event map[string]any) map[string]any {
	op, _ := event["operation"].(string)
	a, _ := event["a"].(float64)
	b, _ := event["b"].(float64)
	switch op {
	case "add":
		return map[string]any{"result": a + b}
	case "subtract":
		return map[string]any{"result": a - b}
	case "multiply":
		return map[string]any{"result": a * b}
	case "divide":
		if b == 0 {
			return map[string]any{"error": "cannot divide by zero"}
		}
		return map[string]any{"result": a / b}
	}
	if _, ok := event["operation"]; !ok {
		return map[string]any{"error": "unsupported operation: None"}
	}
	return map[string]any{"error": fmt.Sprintf("unsupported operation: %v", event["operation"])}
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
