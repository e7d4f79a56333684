"""Normalized correlation between fingerprints and the pairwise similarity matrix."""
import csv
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateInputError, FormatError, MatrixError, ShapeError
from .fingerprint import Fingerprint

_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    ids: Tuple[str, ...]
    values: np.ndarray  # (n, n) float64, symmetric, unit diagonal

    def __len__(self):
        return len(self.ids)

    def distances(self) -> np.ndarray:
        d = 1.0 - self.values
        np.fill_diagonal(d, 0.0)
        return d


def _vector(x: Union[Fingerprint, np.ndarray]) -> np.ndarray:
    arr = x.values if isinstance(x, Fingerprint) else np.asarray(x)
    return arr.reshape(-1)


def correlation(a: Union[Fingerprint, np.ndarray], b: Union[Fingerprint, np.ndarray]) -> float:
    """Pearson correlation of the row-major flattened fingerprints, clamped to [-1, 1]."""
    if isinstance(a, Fingerprint) and isinstance(b, Fingerprint):
        if a.values.shape != b.values.shape:
            raise ShapeError(f"fingerprint shapes differ: {a.values.shape} vs {b.values.shape}")
    va = _vector(a).astype(np.float64)
    vb = _vector(b).astype(np.float64)
    if va.shape != vb.shape:
        raise ShapeError(f"vector lengths differ: {va.size} vs {vb.size}")
    if va.size < 2:
        raise DegenerateInputError("correlation needs at least 2 elements")
    ca = va - va.mean()
    cb = vb - vb.mean()
    na = np.sqrt(np.dot(ca, ca))
    nb = np.sqrt(np.dot(cb, cb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("constant vector has zero norm after centering")
    r = float(np.dot(ca, cb)) / (na * nb)
    return min(1.0, max(-1.0, r))


def build_matrix(fps: Sequence[Fingerprint], ids: Sequence[str] = None) -> SimilarityMatrix:
    """All pairwise correlations.

    The Gram matrix of the centered vectors is accumulated in float64 column
    chunks so peak memory is ``n * _CHUNK`` doubles on top of the inputs.
    """
    n = len(fps)
    if n < 2:
        raise MatrixError(f"need at least 2 fingerprints, got {n}")
    ids = tuple(ids) if ids is not None else tuple(fp.video_id or str(i) for i, fp in enumerate(fps))
    if len(ids) != n:
        raise MatrixError("ids and fingerprints differ in length")
    shape = fps[0].values.shape
    for fid, fp in zip(ids, fps):
        if fp.values.shape != shape:
            raise ShapeError(f"{fid}: shape {fp.values.shape} differs from {shape}")
    flat = [fp.values.reshape(-1) for fp in fps]
    size = flat[0].size
    means = np.array([v.mean(dtype=np.float64) for v in flat])
    gram = np.zeros((n, n))
    for start in range(0, size, _CHUNK):
        block = np.stack([v[start:start + _CHUNK] for v in flat]).astype(np.float64)
        block -= means[:, None]
        gram += block @ block.T
    norms = np.sqrt(np.diag(gram))
    for fid, nv in zip(ids, norms):
        if nv == 0.0:
            raise DegenerateInputError(f"{fid}: fingerprint is constant")
    corr = gram / np.outer(norms, norms)
    corr = np.triu(corr, 1)
    corr = corr + corr.T
    np.fill_diagonal(corr, 1.0)
    np.clip(corr, -1.0, 1.0, out=corr)
    return SimilarityMatrix(ids, corr)


def check_matrix(sim: SimilarityMatrix) -> None:
    v = sim.values
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(sim.ids):
        raise MatrixError(f"similarity matrix must be square and match {len(sim.ids)} ids")
    if not np.all(np.isfinite(v)):
        raise MatrixError("similarity matrix has non-finite entries")
    if not np.array_equal(v, v.T):
        raise MatrixError("similarity matrix is not symmetric")


def write_matrix_csv(path, sim: SimilarityMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sim.ids)
        for row in sim.values:
            w.writerow(["%.9g" % v for v in row])


def read_matrix_csv(path) -> SimilarityMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    ids = tuple(rows[0])
    body = [r for r in rows[1:] if r]
    if len(body) != len(ids) or any(len(r) != len(ids) for r in body):
        raise FormatError(f"{path}: expected {len(ids)} rows of {len(ids)} values")
    try:
        values = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    sim = SimilarityMatrix(ids, values)
    check_matrix(sim)
    return sim
