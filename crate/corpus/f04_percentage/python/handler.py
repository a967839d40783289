import json
import sys


def handler(event):
    part = event["part"]
    whole = event["whole"]
    if whole == 0:
        return {"error": "whole must not be zero"}
    return {"percentage": round(part / whole * 100, 2)}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
