import json
import sys


def fib(n):
    if n < 2:
        return n
    return fib(n - 1) + fib(n - 2)


def handler(event):
    n = event["n"]
    if n < 0:
        return {"error": "n must be non-negative"}
    return {"n": n, "fibonacci": fib(n)}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
