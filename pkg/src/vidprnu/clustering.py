"""Average-linkage agglomeration over correlations, flat cuts, and silhouette selection."""
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import FormatError, RangeError, TooFewItemsError
from .similarity import SimilarityMatrix, check_matrix


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    similarity: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge history. Leaves are 0..n-1; the cluster created by merge t is n + t."""
    leaf_ids: Tuple[str, ...]
    merges: Tuple[Merge, ...]

    @property
    def n(self) -> int:
        return len(self.leaf_ids)


@dataclass(frozen=True)
class SilhouetteReport:
    scores: np.ndarray
    cohesion: np.ndarray
    separation: np.ndarray
    sc: float


@dataclass(frozen=True)
class ClusterResult:
    assignment: Dict[str, int]
    k: int
    silhouette: float

    def clusters(self) -> List[List[str]]:
        groups: List[List[str]] = [[] for _ in range(self.k)]
        for vid, label in self.assignment.items():
            groups[label].append(vid)
        return groups


def build_dendrogram(sim: SimilarityMatrix) -> Dendrogram:
    """Greedy average linkage: repeatedly merge the most similar pair of clusters.

    Ties go to the pair with the lexicographically smallest
    (min leaf of u, min leaf of v).
    """
    check_matrix(sim)
    n = len(sim.ids)
    if n < 2:
        raise TooFewItemsError(f"need at least 2 items to cluster, got {n}")
    a, b, s, size = kernels.average_linkage(np.ascontiguousarray(sim.values, dtype=np.float64))
    merges = tuple(Merge(int(x), int(y), float(z), int(w)) for x, y, z, w in zip(a, b, s, size))
    return Dendrogram(tuple(sim.ids), merges)


def _relabel(labels: np.ndarray) -> np.ndarray:
    """Contiguous labels in order of first appearance."""
    mapping = {}
    out = np.empty(len(labels), np.int64)
    for i, lab in enumerate(labels):
        out[i] = mapping.setdefault(int(lab), len(mapping))
    return out


def cut_labels(dendrogram: Dendrogram, k: int) -> np.ndarray:
    n = dendrogram.n
    if not 1 <= k <= n:
        raise RangeError(f"k={k} outside [1, {n}]")
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, m in enumerate(dendrogram.merges[: n - k]):
        parent[find(m.a)] = n + t
        parent[find(m.b)] = n + t
    return _relabel(np.array([find(i) for i in range(n)]))


def cut(dendrogram: Dendrogram, k: int) -> Dict[str, int]:
    """Undo the last k-1 merges; each remaining subtree is one cluster."""
    if not 2 <= k <= dendrogram.n:
        raise RangeError(f"k={k} outside [2, {dendrogram.n}]")
    labels = cut_labels(dendrogram, k)
    return dict(zip(dendrogram.leaf_ids, (int(x) for x in labels)))


def silhouette(labels: Sequence[int], distances: np.ndarray) -> SilhouetteReport:
    """Silhouette of every item; singletons score 0, and SC is the mean."""
    labels = np.asarray(labels)
    d = np.asarray(distances, dtype=np.float64)
    n = len(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise RangeError("silhouette needs at least 2 clusters")
    onehot = (labels[:, None] == uniq[None, :]).astype(np.float64)
    counts = onehot.sum(axis=0)
    sums = d @ onehot  # (n, k): total distance from item to each cluster
    own = np.searchsorted(uniq, labels)
    own_count = counts[own]
    idx = np.arange(n)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = (sums[idx, own] - d[idx, idx]) / (own_count - 1)
        means = sums / counts[None, :]
    means[idx, own] = np.inf
    b = means.min(axis=1)
    a = np.where(own_count > 1, a, 0.0)
    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = (own_count > 1) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return SilhouetteReport(s, a, b, float(s.mean()))


def check_item_count(n: int) -> None:
    if n < 3:
        raise TooFewItemsError(f"clustering needs at least 3 videos, got {n}")


def select_clustering(sim: SimilarityMatrix, k: Optional[int] = None) -> ClusterResult:
    """Cut the dendrogram at the k in [2, n-1] with the highest silhouette (ties: smallest k).

    Passing ``k`` skips the search and cuts at that k.
    """
    n = len(sim.ids)
    check_item_count(n)
    dendro = build_dendrogram(sim)
    dist = sim.distances()
    if k is not None:
        if not 2 <= k <= n - 1:
            raise RangeError(f"k={k} outside [2, {n - 1}]")
        candidates = [k]
    else:
        candidates = range(2, n)
    best_k, best_sc, best_labels = None, -np.inf, None
    for kk in candidates:
        labels = cut_labels(dendro, kk)
        sc = silhouette(labels, dist).sc
        if sc > best_sc:
            best_k, best_sc, best_labels = kk, sc, labels
    assignment = dict(zip(sim.ids, (int(x) for x in best_labels)))
    return ClusterResult(assignment, best_k, float(best_sc))


def write_clusters_json(path, result: ClusterResult) -> None:
    doc = {"k": result.k, "silhouette": result.silhouette, "clusters": result.clusters()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_clusters_json(path) -> List[List[str]]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    clusters = doc.get("clusters") if isinstance(doc, dict) else None
    if not isinstance(clusters, list) or not all(isinstance(c, list) for c in clusters):
        raise FormatError(f"{path}: missing 'clusters' list of lists")
    return [[str(v) for v in c] for c in clusters]
