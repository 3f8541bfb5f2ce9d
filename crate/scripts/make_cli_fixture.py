#!/usr/bin/env python3
"""Cut a small committed fixture from the mail-subject dataset and GloVe file.

Usage: make_cli_fixture.py <mail dir> <glove100.txt> <out dir>

Takes the first rows of each label from every split (deterministic, no RNG)
and keeps only the embedding lines for words the fixture can tokenize to.
"""
import os
import sys

SIZES = {"train": (120, 120), "dev": (30, 30), "test": (30, 30)}


def tokenize(text):
    # mirrors the library tokenizer: alnum runs lowercased, other
    # non-space characters as single tokens
    out, word = [], []
    for ch in text:
        if ch.isalnum():
            word.append(ch.lower())
            continue
        if word:
            out.append("".join(word))
            word = []
        if not ch.isspace():
            out.append(ch.lower())
    if word:
        out.append("".join(word))
    return out


def main(mail, glove, out):
    os.makedirs(os.path.join(out, "mail"), exist_ok=True)
    vocab = set()
    for split, (n0, n1) in SIZES.items():
        want = {"0": n0, "1": n1}
        rows = []
        with open(os.path.join(mail, split + ".tsv"), encoding="utf-8") as f:
            for line in f:
                label, text = line.rstrip("\n").split("\t", 1)
                if want[label] > 0 and tokenize(text):
                    want[label] -= 1
                    rows.append(line if line.endswith("\n") else line + "\n")
        for r in rows:
            vocab.update(tokenize(r.split("\t", 1)[1]))
        with open(os.path.join(out, "mail", split + ".tsv"), "w", encoding="utf-8") as f:
            f.writelines(rows)
    kept = 0
    with open(glove, encoding="utf-8") as src, open(os.path.join(out, "glove100.txt"), "w", encoding="utf-8") as dst:
        for line in src:
            if line.split(" ", 1)[0] in vocab:
                dst.write(line)
                kept += 1
    print(f"{len(vocab)} fixture words, {kept} embedding lines")


if __name__ == "__main__":
    main(*sys.argv[1:4])
