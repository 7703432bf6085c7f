#!/usr/bin/env python3
"""Regenerate data/wine.scale and data/wine.csv from the UCI wine table.

Features are min-max scaled to [-1, 1] per column with the same rule as
LIBSVM's svm-scale (lower=-1, upper=1), which is the form the LIBSVM
dataset collection distributes as `wine.scale`. Labels are 1, 2, 3.
"""
import os
import sys

import sklearn

src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "wine_data.csv")
out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")

with open(src) as fh:
    rows = [line.strip().split(",") for line in fh.readlines()[1:] if line.strip()]

features = [[float(v) for v in r[:-1]] for r in rows]
labels = [int(r[-1]) + 1 for r in rows]
dim = len(features[0])
lo = [min(f[j] for f in features) for j in range(dim)]
hi = [max(f[j] for f in features) for j in range(dim)]


def scale(v, j):
    return -1.0 + 2.0 * (v - lo[j]) / (hi[j] - lo[j])


scaled = [[float("%.6g" % scale(f[j], j)) for j in range(dim)] for f in features]

with open(os.path.join(out_dir, "wine.scale"), "w") as fh:
    for y, f in zip(labels, scaled):
        cells = " ".join("%d:%.6g" % (j + 1, v) for j, v in enumerate(f) if v != 0.0)
        fh.write("%d %s\n" % (y, cells))

with open(os.path.join(out_dir, "wine.csv"), "w") as fh:
    for y, f in zip(labels, scaled):
        fh.write("%d,%s\n" % (y, ",".join("%.6g" % v for v in f)))
