#!/usr/bin/env python3
"""Write the replay transcripts under fixtures/replays from the corpus.

fix_loop/<function>.replay.json: the first translation carries a type error,
the fix-build answer is the reference Go program.
"""
import json
import pathlib
import sys

BROKEN = 'var attempt int = "first"\n\n'


def fence(lang, code):
    return f"```{lang}\n{code.rstrip()}\n```"


def documented(fn):
    src = (fn / "python" / "handler.py").read_text()
    desc = next(l for l in (fn / "function.toml").read_text().splitlines() if l.startswith("description"))
    desc = desc.split("=", 1)[1].strip().strip('"')
    return f'"""{desc}\n\nReads one JSON event on stdin and prints one JSON response."""\n' + src


def fix_loop(fn):
    go = (fn / "go" / "main.go").read_text()
    head, sep, rest = go.partition("\nfunc ")
    broken = head + "\n" + BROKEN.rstrip("\n") + "\n" + sep + rest
    return [
        {"template_id": "document", "response_text": "Documented version:\n\n" + fence("python", documented(fn))},
        {"template_id": "translate", "attempt": 1, "response_text": "Here is the Go program.\n\n" + fence("go", broken)},
        {"template_id": "fix_build", "attempt": 1, "response_text": "The variable had the wrong type.\n\n" + fence("go", go)},
        {"template_id": "align", "response_text": fence("go", go)},
    ]


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    out = root / "fixtures" / "replays"
    (out / "fix_loop").mkdir(parents=True, exist_ok=True)
    for fn in sorted(p for p in (root / "corpus").iterdir() if p.is_dir()):
        path = out / "fix_loop" / f"{fn.name}.replay.json"
        path.write_text(json.dumps(fix_loop(fn), indent=2) + "\n")
        print(path)


if __name__ == "__main__":
    main()
