package main

import (
	"encoding/json"
	"os"
	"fmt"
	"net/http"
	"net/url"
	"time"
)

func handler(event map[string]any) map[string]any {
	key := os.Getenv("OPENWEATHER_API_KEY")
	if key == "" {
		return map[string]any{"error": "OPENWEATHER_API_KEY is not set"}
	}
	city, ok := event["city"].(string)
	if !ok {
		city = "Berlin"
	}
	query := url.Values{"q": {city}, "appid": {key}, "units": {"metric"}}
	client := http.Client{Timeout: 10 * time.Second}
	resp, err := client.Get("https://api.openweathermap.org/data/2.5/weather?" + query.Encode())
	if err != nil {
		return map[string]any{"error": err.Error()}
	}
	defer resp.Body.Close()
	if resp.StatusCode != http.StatusOK {
		return map[string]any{"error": fmt.Sprintf("HTTP Error %d: %s", resp.StatusCode, http.StatusText(resp.StatusCode))}
	}
	var body struct {
		Name string `json:"name"`
		Main struct {
			Temp float64 `json:"temp"`
		} `json:"main"`
		Weather []struct {
			Main string `json:"main"`
		} `json:"weather"`
	}
	if err := json.NewDecoder(resp.Body).Decode(&body); err != nil {
		return map[string]any{"error": err.Error()}
	}
	conditions := []string{}
	for _, w := range body.Weather {
		conditions = append(conditions, w.Main)
	}
	return map[string]any{"city": body.Name, "temperature": body.Main.Temp, "conditions": conditions}
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
