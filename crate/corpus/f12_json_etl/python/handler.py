import json
import sys


def handler(event):
    key = event.get("group_by", "category")
    field = event.get("sum", "amount")
    groups = {}
    rejected = 0
    for record in event.get("records", []):
        k = record.get(key)
        v = record.get(field)
        if not isinstance(k, str) or isinstance(v, bool) or not isinstance(v, (int, float)):
            rejected += 1
            continue
        g = groups.setdefault(k, {"count": 0, "total": 0.0, "max": v})
        g["count"] += 1
        g["total"] += v
        g["max"] = max(g["max"], v)
    out = []
    for k in sorted(groups):
        g = groups[k]
        out.append({
            "key": k,
            "count": g["count"],
            "total": round(g["total"], 4),
            "mean": round(g["total"] / g["count"], 4),
            "max": g["max"],
        })
    return {"groups": out, "rejected": rejected, "loaded": sum(g["count"] for g in groups.values())}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
