#!/usr/bin/env python3
"""Build a subject-line spam/ham classification dataset in the repository TSV layout.

Usage: spamassassin_subjects.py <datasets-spam-assassin/data dir> <out dir>

Reads the SpamAssassin public corpus as packaged by @stdlib/datasets-spam-assassin
(data PDDL-1.0, contents CC0), extracts each message's decoded Subject header and
writes train.tsv / dev.tsv / test.tsv (80/10/10, fixed seed) with label 1 = spam.
"""
import email
import email.header
import email.policy
import json
import os
import random
import sys


def subject_of(raw):
    msg = email.message_from_string(raw, policy=email.policy.compat32)
    subj = msg.get("Subject")
    if subj is None:
        return None
    parts = []
    for chunk, enc in email.header.decode_header(str(subj)):
        if isinstance(chunk, bytes):
            try:
                chunk = chunk.decode(enc or "latin-1", errors="replace")
            except LookupError:
                chunk = chunk.decode("latin-1", errors="replace")
        parts.append(chunk)
    text = " ".join("".join(parts).split())
    return text or None


def main():
    src, dst = sys.argv[1], sys.argv[2]
    rows = []
    for group in sorted(os.listdir(src)):
        gdir = os.path.join(src, group)
        if not os.path.isdir(gdir):
            continue
        label = 1 if group.startswith("spam") else 0
        for name in sorted(os.listdir(gdir)):
            if not name.endswith(".json"):
                continue
            with open(os.path.join(gdir, name), encoding="utf-8") as f:
                record = json.load(f)
            subj = subject_of(record["text"])
            if subj and any(ch.isalnum() for ch in subj):
                rows.append((label, subj.replace("\t", " ")))
    random.Random(0).shuffle(rows)
    n = len(rows)
    n_train, n_dev = int(0.8 * n), int(0.1 * n)
    splits = {
        "train": rows[:n_train],
        "dev": rows[n_train:n_train + n_dev],
        "test": rows[n_train + n_dev:],
    }
    os.makedirs(dst, exist_ok=True)
    for split, items in splits.items():
        with open(os.path.join(dst, f"{split}.tsv"), "w", encoding="utf-8") as out:
            for label, text in items:
                out.write(f"{label}\t{text}\n")
    print(f"{n} messages: " + ", ".join(f"{k}={len(v)}" for k, v in splits.items()), file=sys.stderr)


if __name__ == "__main__":
    main()
