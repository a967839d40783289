package main

import (
	"encoding/json"
	"os"
	"net/http"
	"time"
)

func handler(event map[string]any) map[string]any {
	url, ok := event["url"].(string)
	if !ok {
		url = "https://jsonplaceholder.typicode.com/todos/1"
	}
	client := http.Client{Timeout: 10 * time.Second}
	resp, err := client.Get(url)
	if err != nil {
		return map[string]any{"error": err.Error()}
	}
	defer resp.Body.Close()
	var body map[string]any
	if err := json.NewDecoder(resp.Body).Decode(&body); err != nil {
		return map[string]any{"error": err.Error()}
	}
	return map[string]any{"status": resp.StatusCode, "title": body["title"], "done": body["completed"]}
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
