package main

import (
	"encoding/json"
	"os"
	"math"
)

func handler(event map[string]any) map[string]any {
	part, _ := event["part"].(float64)
	whole, _ := event["whole"].(float64)
	if whole == 0 {
		return map[string]any{"error": "whole must not be zero"}
	}
	return map[string]any{"percentage": math.Round(part/whole*100*100) / 100}
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
