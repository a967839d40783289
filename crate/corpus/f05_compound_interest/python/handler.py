import json
import sys


def handler(event):
    try:
        principal = float(event["principal"])
        rate = float(event["rate"])
        n = int(event["times_per_year"])
        years = float(event["years"])
    except (KeyError, ValueError) as e:
        return {"error": str(e)}
    amount = principal * (1 + rate / n) ** (n * years)
    return {"amount": round(amount, 2), "interest": round(amount - principal, 2)}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
