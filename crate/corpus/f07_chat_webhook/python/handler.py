import json
import sys


def handler(event):
    title = event.get("title")
    if not title:
        return {"error": "title is required"}
    widgets = [{"textParagraph": {"text": event.get("text", "")}}]
    buttons = [
        {"textButton": {"text": b["text"], "onClick": {"openLink": {"url": b["url"]}}}}
        for b in event.get("buttons", [])
    ]
    if buttons:
        widgets.append({"buttons": buttons})
    card = {"header": {"title": title}, "sections": [{"widgets": widgets}]}
    if event.get("subtitle"):
        card["header"]["subtitle"] = event["subtitle"]
    return {"cards": [card], "thread": {"name": event.get("thread", "default")}}


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
