import json
import sys


STAGES = {
    "drop_negative": lambda xs: [x for x in xs if x >= 0],
    "square": lambda xs: [x * x for x in xs],
    "dedupe": lambda xs: list(dict.fromkeys(xs)),
    "sort_desc": lambda xs: sorted(xs, reverse=True),
    "top3": lambda xs: xs[:3],
    "cumulative": lambda xs: [sum(xs[: i + 1]) for i in range(len(xs))],
}


def handler(event):
    values = event.get("values", [])
    applied = []
    for name in event.get("stages", []):
        stage = STAGES.get(name)
        if stage is None:
            return {"error": f"unknown stage: {name}", "applied": applied}
        values = stage(values)
        applied.append(name)
    return {"result": values, "applied": applied, "count": len(values)}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
