import json
import sys


OPERATIONS = {
    "add": lambda a, b: a + b,
    "subtract": lambda a, b: a - b,
    "multiply": lambda a, b: a * b,
    "divide": lambda a, b: a / b,
}


def handler(event):
    op = event.get("operation")
    if op not in OPERATIONS:
        return {"error": f"unsupported operation: {op}"}
    try:
        return {"result": OPERATIONS[op](event["a"], event["b"])}
    except ZeroDivisionError as e:
        return {"error": str(e)}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
