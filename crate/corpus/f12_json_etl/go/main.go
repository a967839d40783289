package main

import (
	"encoding/json"
	"os"
	"math"
	"sort"
)

type group struct {
	count int
	total float64
	max   float64
}

func handler(event map[string]any) map[string]any {
	key, ok := event["group_by"].(string)
	if !ok {
		key = "category"
	}
	field, ok := event["sum"].(string)
	if !ok {
		field = "amount"
	}
	groups := map[string]*group{}
	rejected, loaded := 0, 0
	records, _ := event["records"].([]any)
	for _, r := range records {
		rec, _ := r.(map[string]any)
		k, okK := rec[key].(string)
		v, okV := rec[field].(float64)
		if !okK || !okV {
			rejected++
			continue
		}
		g, found := groups[k]
		if !found {
			g = &group{max: v}
			groups[k] = g
		}
		g.count++
		g.total += v
		g.max = math.Max(g.max, v)
		loaded++
	}
	keys := make([]string, 0, len(groups))
	for k := range groups {
		keys = append(keys, k)
	}
	sort.Strings(keys)
	round := func(x float64) float64 { return math.Round(x*1e4) / 1e4 }
	out := []any{}
	for _, k := range keys {
		g := groups[k]
		out = append(out, map[string]any{
			"key":   k,
			"count": g.count,
			"total": round(g.total),
			"mean":  round(g.total / float64(g.count)),
			"max":   g.max,
		})
	}
	return map[string]any{"groups": out, "rejected": rejected, "loaded": loaded}
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
