import json
import sys


LOG = []


def logged(fn):
    def wrapper(*args):
        LOG.append(f"call {fn.__name__}")
        result = fn(*args)
        LOG.append(f"{fn.__name__} -> {result!r}"[:60])
        return result
    return wrapper


@logged
def normalize(text):
    return " ".join(text.split()).lower()


@logged
def count_words(text):
    return len(text.split()) if text else 0


@logged
def longest_word(text):
    words = text.split()
    return max(words, key=len) if words else ""


def handler(event):
    LOG.clear()
    text = normalize(event.get("text", ""))
    return {
        "text": text,
        "words": count_words(text),
        "longest": longest_word(text),
        "log": list(LOG),
    }


if __name__ == "__main__":
    print(json.dumps(handler(json.load(sys.stdin))))
