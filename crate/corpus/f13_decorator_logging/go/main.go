package main

import (
	"encoding/json"
	"os"
	"fmt"
	"strings"
)

var log []string

func logged[T any](name string, fn func(string) T) func(string) T {
	return func(text string) T {
		log = append(log, "call "+name)
		result := fn(text)
		var repr string
		switch r := any(result).(type) {
		case string:
			repr = "'" + r + "'"
		default:
			repr = fmt.Sprint(r)
		}
		entry := name + " -> " + repr
		if len(entry) > 60 {
			entry = entry[:60]
		}
		log = append(log, entry)
		return result
	}
}

var normalize = logged("normalize", func(text string) string {
	return strings.ToLower(strings.Join(strings.Fields(text), " "))
})

var countWords = logged("count_words", func(text string) int {
	return len(strings.Fields(text))
})

var longestWord = logged("longest_word", func(text string) string {
	best := ""
	for _, w := range strings.Fields(text) {
		if len([]rune(w)) > len([]rune(best)) {
			best = w
		}
	}
	return best
})

func handler(event map[string]any) map[string]any {
	log = log[:0]
	raw, _ := event["text"].(string)
	text := normalize(raw)
	return map[string]any{
		"text":    text,
		"words":   countWords(text),
		"longest": longestWord(text),
		"log":     append([]string{}, log...),
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
