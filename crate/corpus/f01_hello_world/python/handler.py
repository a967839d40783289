import json
import sys


def handler(event):
    name = event.get("name") or "World"
    return {"message": f"Hello, {name}!"}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
