package main

import (
	"encoding/json"
	"os"
	"container/heap"
)

type item struct {
	dist float64
	node string
}

type queue []item

func (q queue) Len() int { return len(q) }
func (q queue) Less(i, j int) bool {
	if q[i].dist != q[j].dist {
		return q[i].dist < q[j].dist
	}
	return q[i].node < q[j].node
}
func (q queue) Swap(i, j int)  { q[i], q[j] = q[j], q[i] }
func (q *queue) Push(x any)    { *q = append(*q, x.(item)) }
func (q *queue) Pop() any {
	old := *q
	it := old[len(old)-1]
	*q = old[:len(old)-1]
	return it
}

type edge struct {
	to string
	w  float64
}

func handler(event map[string]any) map[string]any {
	graph := map[string][]edge{}
	edges, _ := event["edges"].([]any)
	for _, e := range edges {
		t := e.([]any)
		u, v := t[0].(string), t[1].(string)
		graph[u] = append(graph[u], edge{v, t[2].(float64)})
	}
	source, target := event["source"].(string), event["target"].(string)
	dist := map[string]float64{source: 0}
	prev := map[string]string{}
	seen := map[string]bool{}
	q := &queue{{0, source}}
	for q.Len() > 0 {
		it := heap.Pop(q).(item)
		if seen[it.node] {
			continue
		}
		seen[it.node] = true
		if it.node == target {
			break
		}
		for _, e := range graph[it.node] {
			nd := it.dist + e.w
			if d, ok := dist[e.to]; !ok || nd < d {
				dist[e.to] = nd
				prev[e.to] = it.node
				heap.Push(q, item{nd, e.to})
			}
		}
	}
	if !seen[target] {
		return map[string]any{"distance": nil, "path": []string{}}
	}
	path := []string{target}
	for path[len(path)-1] != source {
		path = append(path, prev[path[len(path)-1]])
	}
	for i, j := 0, len(path)-1; i < j; i, j = i+1, j-1 {
		path[i], path[j] = path[j], path[i]
	}
	return map[string]any{"distance": dist[target], "path": path}
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
