"""Independent brute-force references used by several test modules."""

import math

import numpy as np

# 5 x 4 two-class toy; None marks an unobserved entry.
TOY_ROWS = [
    [1.0, 2.0, None, 4.0],
    [None, 3.0, 5.0, None],
    [2.0, None, 1.0, 7.0],
    [4.0, 6.0, None, 1.0],
    [3.0, None, 2.0, 2.0],
]
TOY_LABELS = [0, 0, 1, 1, 0]

# Filled values worked out by hand (see the comments in test_imputers).
TOY_EXPECTED = {
    "zf": [[1, 2, 0, 4], [0, 3, 5, 0], [2, 0, 1, 7], [4, 6, 0, 1], [3, 0, 2, 2]],
    "mu": [[1, 2, 8 / 3, 4], [2.5, 3, 5, 3.5], [2, 11 / 3, 1, 7], [4, 6, 8 / 3, 1],
           [3, 11 / 3, 2, 2]],
    "ms": [[1, 2, 3.5, 4], [2, 3, 5, 3], [2, 6, 1, 7], [4, 6, 1, 1], [3, 2.5, 2, 2]],
    "knn1": [[1, 2, 5, 4], [1, 3, 5, 4], [2, 6, 1, 7], [4, 6, 1, 1], [3, 2, 2, 2]],
}


def toy_arrays():
    X = np.array([[0.0 if v is None else v for v in r] for r in TOY_ROWS])
    M = np.array([[v is not None for v in r] for r in TOY_ROWS])
    return X, M, np.array(TOY_LABELS)


def brute_impute(rows, labels, kind, k=1):
    """Plain-Python imputation straight from the definitions."""
    n, N = len(rows), len(rows[0])

    def mean(vals):
        return sum(vals) / len(vals)

    def col_mean(idx, c):
        vals = [rows[i][c] for i in idx if rows[i][c] is not None]
        return mean(vals) if vals else None

    def dist(i, j):
        co = [c for c in range(N) if rows[i][c] is not None and rows[j][c] is not None]
        if not co:
            return math.inf
        return math.sqrt(N / len(co) * sum((rows[i][c] - rows[j][c]) ** 2 for c in co))

    out = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i]]
        row = []
        for c in range(N):
            if rows[i][c] is not None:
                row.append(rows[i][c])
            elif kind == "zf":
                row.append(0.0)
            elif kind == "mu":
                row.append(col_mean(range(n), c))
            elif kind == "ms":
                row.append(col_mean(same, c))
            else:
                ranked = sorted(same, key=lambda j: (dist(i, j), j))
                donors = [rows[j][c] for j in ranked if rows[j][c] is not None][:k]
                row.append(mean(donors) if donors else col_mean(same, c))
        out.append(row)
    return out
