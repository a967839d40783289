package main

import (
	"encoding/json"
	"os"
)

func fib(n int) int {
	if n < 2 {
		return n
	}
	return fib(n-1) + fib(n-2)
}

func handler(event map[string]any) map[string]any {
	n := int(event["n"].(float64))
	if n < 0 {
		return map[string]any{"error": "n must be non-negative"}
	}
	return map[string]any{"n": n, "fibonacci": fib(n)}
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
