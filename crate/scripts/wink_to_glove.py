#!/usr/bin/env python3
"""Convert the wink-embeddings-sg-100d npm package JSON into GloVe text format.

Usage: wink_to_glove.py <wink-embeddings-sg-100d.json> <out.txt>

The package stores GloVe 6B 100d vectors (PDDL-1.0) as
{"dimensions": d, "words": [...], "vectors": {word: [v_0..v_{d-1}, l2norm, index]}}.
"""
import json
import sys


def main():
    src, dst = sys.argv[1], sys.argv[2]
    with open(src, encoding="utf-8") as f:
        blob = json.load(f)
    dim = blob["dimensions"]
    vectors = blob["vectors"]
    written = 0
    with open(dst, "w", encoding="utf-8") as out:
        for word in blob["words"]:
            vec = vectors.get(word)
            if vec is None or any(c.isspace() for c in word):
                continue
            out.write(word)
            for v in vec[:dim]:
                out.write(" ")
                out.write(repr(float(v)))
            out.write("\n")
            written += 1
    print(f"wrote {written} vectors of dimension {dim} to {dst}", file=sys.stderr)


if __name__ == "__main__":
    main()
