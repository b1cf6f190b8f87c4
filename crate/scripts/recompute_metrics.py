#!/usr/bin/env python3
"""Recompute accuracy and support-weighted F1 from a predictions CSV.

Usage: recompute_metrics.py predictions.csv
Prints JSON with acc, f1, acc_no_other, f1_no_other (null when no rows remain).
"""
import csv
import json
import sys
from collections import Counter


def scores(pairs):
    if not pairs:
        return None, None
    n = len(pairs)
    correct = sum(t == p for t, p in pairs)
    support = Counter(t for t, _ in pairs)
    predicted = Counter(p for _, p in pairs)
    hits = Counter(t for t, p in pairs if t == p)
    weighted = 0.0
    for label, s in support.items():
        precision = hits[label] / predicted[label] if predicted[label] else 0.0
        recall = hits[label] / s
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        weighted += s * f1
    return correct / n, weighted / n


def main(path):
    with open(path, newline="") as fh:
        rows = [(r["true_label"], r["predicted_label"]) for r in csv.DictReader(fh)]
    acc, f1 = scores(rows)
    acc2, f12 = scores([(t, p) for t, p in rows if t != "Other"])
    print(json.dumps({"acc": acc, "f1": f1, "acc_no_other": acc2, "f1_no_other": f12}))


if __name__ == "__main__":
    main(sys.argv[1])
