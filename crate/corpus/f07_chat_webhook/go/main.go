package main

import (
	"encoding/json"
	"os"
)

func handler(event map[string]any) map[string]any {
	title, _ := event["title"].(string)
	if title == "" {
		return map[string]any{"error": "title is required"}
	}
	text, _ := event["text"].(string)
	widgets := []any{map[string]any{"textParagraph": map[string]any{"text": text}}}
	var buttons []any
	raw, _ := event["buttons"].([]any)
	for _, b := range raw {
		m, _ := b.(map[string]any)
		buttons = append(buttons, map[string]any{"textButton": map[string]any{
			"text":    m["text"],
			"onClick": map[string]any{"openLink": map[string]any{"url": m["url"]}},
		}})
	}
	if len(buttons) > 0 {
		widgets = append(widgets, map[string]any{"buttons": buttons})
	}
	header := map[string]any{"title": title}
	if sub, _ := event["subtitle"].(string); sub != "" {
		header["subtitle"] = sub
	}
	thread, ok := event["thread"].(string)
	if !ok {
		thread = "default"
	}
	card := map[string]any{"header": header, "sections": []any{map[string]any{"widgets": widgets}}}
	return map[string]any{"cards": []any{card}, "thread": map[string]any{"name": thread}}
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
