#!/usr/bin/env python3
"""Recompute `expected` in corpus test files by running the Python original.

Functions marked `ci = false` are skipped; their expectations are kept by hand.
Usage: scripts/regen_expected.py [corpus-dir]
"""
import json
import pathlib
import subprocess
import sys


def main():
    corpus = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "corpus")
    for fn in sorted(p for p in corpus.iterdir() if p.is_dir()):
        if "ci = false" in (fn / "function.toml").read_text():
            continue
        for test in sorted((fn / "tests").glob("*.json")):
            case = json.loads(test.read_text())
            out = subprocess.run(
                [sys.executable, "handler.py"],
                cwd=fn / "python",
                input=json.dumps(case["input"]),
                capture_output=True,
                text=True,
                check=True,
            )
            case["expected"] = json.loads(out.stdout)
            test.write_text(json.dumps(case, indent=2, ensure_ascii=False) + "\n")
            print(f"{fn.name}/{test.name}")


if __name__ == "__main__":
    main()
