import json
import sys


def handler(event):
    user = event.get("user", {})
    errors = []
    name = (user.get("name") or "").strip()
    if not name:
        errors.append("name is required")
    email = (user.get("email") or "").strip().lower()
    local, _, domain = email.partition("@")
    if not local or "." not in domain:
        errors.append("email is invalid")
    address = user.get("address") or {}
    city = address.get("city", "")
    zip_code = str(address.get("zip", ""))
    if not (len(zip_code) == 5 and zip_code.isdigit()):
        errors.append("zip must have 5 digits")
    age = user.get("age")
    if age is not None and not (0 <= age <= 150):
        errors.append("age out of range")
    tags = sorted({t.strip().lower() for t in user.get("tags", []) if t.strip()})
    return {
        "valid": not errors,
        "errors": errors,
        "user": {"name": name, "email": email, "city": city, "zip": zip_code, "tags": tags},
    }


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
