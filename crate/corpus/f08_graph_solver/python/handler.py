import heapq
import json
import sys


def handler(event):
    graph = {}
    for u, v, w in event["edges"]:
        graph.setdefault(u, []).append((v, w))
    source, target = event["source"], event["target"]
    dist = {source: 0}
    prev = {}
    queue = [(0, source)]
    seen = set()
    while queue:
        d, u = heapq.heappop(queue)
        if u in seen:
            continue
        seen.add(u)
        if u == target:
            break
        for v, w in graph.get(u, []):
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(queue, (nd, v))
    if target not in seen:
        return {"distance": None, "path": []}
    path = [target]
    while path[-1] != source:
        path.append(prev[path[-1]])
    return {"distance": dist[target], "path": path[::-1]}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
