package main

import (
	"encoding/json"
	"os"
	"math"
)

func handler(event map[string]any) map[string]any {
	var v [4]float64
	for i, key := range []string{"principal", "rate", "times_per_year", "years"} {
		x, ok := event[key].(float64)
		if !ok {
			return map[string]any{"error": "missing field " + key}
		}
		v[i] = x
	}
	principal, rate, n, years := v[0], v[1], math.Trunc(v[2]), v[3]
	amount := principal * math.Pow(1+rate/n, n*years)
	round := func(x float64) float64 { return math.Round(x*100) / 100 }
	return map[string]any{"amount": round(amount), "interest": round(amount - principal)}
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
