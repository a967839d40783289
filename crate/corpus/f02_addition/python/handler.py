import json
import sys


def handler(event):
    return {"result": event["a"] + event["b"]}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
