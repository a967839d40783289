package main

import (
	"encoding/json"
	"os"
	"sort"
)

var stages = map[string]func([]float64) []float64{
	"drop_negative": func(xs []float64) []float64 {
		out := []float64{}
		for _, x := range xs {
			if x >= 0 {
				out = append(out, x)
			}
		}
		return out
	},
	"square": func(xs []float64) []float64 {
		out := make([]float64, len(xs))
		for i, x := range xs {
			out[i] = x * x
		}
		return out
	},
	"dedupe": func(xs []float64) []float64 {
		seen := map[float64]bool{}
		out := []float64{}
		for _, x := range xs {
			if !seen[x] {
				seen[x] = true
				out = append(out, x)
			}
		}
		return out
	},
	"sort_desc": func(xs []float64) []float64 {
		out := append([]float64{}, xs...)
		sort.Sort(sort.Reverse(sort.Float64Slice(out)))
		return out
	},
	"top3": func(xs []float64) []float64 {
		if len(xs) > 3 {
			return xs[:3]
		}
		return xs
	},
	"cumulative": func(xs []float64) []float64 {
		out := make([]float64, len(xs))
		sum := 0.0
		for i, x := range xs {
			sum += x
			out[i] = sum
		}
		return out
	},
}

func handler(event map[string]any) map[string]any {
	values := []float64{}
	raw, _ := event["values"].([]any)
	for _, v := range raw {
		values = append(values, v.(float64))
	}
	applied := []string{}
	names, _ := event["stages"].([]any)
	for _, n := range names {
		name, _ := n.(string)
		stage, ok := stages[name]
		if !ok {
			return map[string]any{"error": "unknown stage: " + name, "applied": applied}
		}
		values = stage(values)
		applied = append(applied, name)
	}
	return map[string]any{"result": values, "applied": applied, "count": len(values)}
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
