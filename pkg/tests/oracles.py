"""Slow, direct reference implementations used as test oracles.

Nothing here imports vidprnu; each function is written straight from the
definition it checks.
"""
import itertools

import numpy as np


def naive_average_linkage(sim):
    """O(n^3) per step average linkage from the definition.

    Returns a list of (a, b, similarity, size) with scipy-style ids: leaves
    0..n-1, the cluster formed at step t is n + t. ``a`` is the cluster with the
    smaller minimum leaf. Ties go to the smallest (min leaf of u, min leaf of v).
    """
    sim = np.asarray(sim, dtype=np.float64)
    n = len(sim)
    clusters = {i: [i] for i in range(n)}  # cluster id -> members
    merges = []
    for step in range(n - 1):
        best = None
        for u, v in itertools.combinations(clusters, 2):
            mu, mv = clusters[u], clusters[v]
            if min(mu) > min(mv):
                u, v, mu, mv = v, u, mv, mu
            total = 0.0
            for i in sorted(mu):
                for j in sorted(mv):
                    total += sim[i, j]
            d = total / (len(mu) * len(mv))
            key = (-d, min(mu), min(mv))
            if best is None or key < best[0]:
                best = (key, u, v, d)
        _, u, v, d = best
        members = clusters.pop(u) + clusters.pop(v)
        clusters[n + step] = members
        merges.append((u, v, d, len(members)))
    return merges


def naive_silhouette(labels, dist):
    """Per-item silhouette straight from the definition; singletons score 0."""
    labels = list(labels)
    n = len(labels)
    out = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            out.append(0.0)
            continue
        a = sum(dist[i][j] for j in own) / len(own)
        b = min(
            sum(dist[i][j] for j in range(n) if labels[j] == c) / sum(1 for x in labels if x == c)
            for c in set(labels) if c != labels[i]
        )
        m = max(a, b)
        out.append(0.0 if m == 0 else (b - a) / m)
    return out


def mann_whitney_auc(scores, positive):
    """Probability a random positive outscores a random negative, ties count half."""
    pos = [s for s, p in zip(scores, positive) if p]
    neg = [s for s, p in zip(scores, positive) if not p]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def random_similarity(rng, n, quantized=False):
    """Symmetric matrix with unit diagonal; ``quantized`` values on a 1/8 grid force ties."""
    if quantized:
        x = rng.integers(-8, 9, size=(n, n)) / 8.0
    else:
        x = rng.uniform(-1, 1, size=(n, n))
    x = np.triu(x, 1)
    x = x + x.T
    np.fill_diagonal(x, 1.0)
    return x


def confusion_to_clusters(rows, groups):
    """Turn a device-by-group count table into (clusters, labels).

    :param rows: mapping device -> list of per-group counts
    :param groups: number of groups
    """
    clusters = [[] for _ in range(groups)]
    labels = {}
    for device, counts in rows.items():
        serial = 0
        for g, c in enumerate(counts):
            for _ in range(c):
                vid = f"{device}_{serial:02d}"
                serial += 1
                clusters[g].append(vid)
                labels[vid] = device
    return clusters, labels


# Published device-by-group counts: block mask only (nine groups) and with the
# gamma3 enhancer (ten groups). Both leave out one device that has no row.
MASK_ONLY_COUNTS = {
    "M32": [5, 0, 0, 0, 0, 0, 0, 2, 3],
    "M27": [0, 10, 0, 0, 0, 0, 0, 0, 0],
    "M31": [0, 0, 10, 0, 0, 0, 0, 0, 0],
    "M28": [0, 0, 0, 10, 0, 0, 0, 0, 0],
    "M17": [0, 0, 0, 0, 7, 0, 0, 3, 0],
    "M29": [0, 0, 0, 0, 0, 10, 0, 0, 0],
    "M12": [0, 0, 0, 0, 0, 0, 10, 0, 0],
    "M00": [0, 0, 0, 0, 0, 0, 0, 2, 6],
}
MASK_ONLY_TPR = [50, 100, 100, 100, 70, 100, 100, 0, 0]

ENHANCED_COUNTS = {
    "M32": [7, 0, 0, 0, 0, 0, 0, 3, 0, 0],
    "M27": [0, 10, 0, 0, 0, 0, 0, 0, 0, 0],
    "M31": [0, 0, 10, 0, 0, 0, 0, 0, 0, 0],
    "M28": [0, 0, 0, 10, 0, 0, 0, 0, 0, 0],
    "M17": [0, 0, 0, 0, 8, 0, 0, 0, 0, 2],
    "M29": [0, 0, 0, 0, 0, 10, 0, 0, 0, 0],
    "M12": [0, 0, 0, 0, 0, 0, 10, 0, 0, 0],
    "M00": [0, 0, 0, 0, 0, 0, 0, 3, 5, 0],
}
ENHANCED_TPR = [70, 100, 100, 100, 80, 100, 100, 0, 50, 20]
