"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The module-level names (``wiener_shrink``, ``accumulate_masked``, ``gamma3_map``,
``average_linkage``) dispatch to numba unless ``VIDPRNU_DISABLE_NUMBA`` is set.
Both variants of every kernel are importable as ``<name>_numba`` and
``<name>_numpy`` so tests and the benchmark can pit them against each other.
"""
import numpy as np
from scipy import ndimage

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Wiener shrinkage of one wavelet detail subband
# ---------------------------------------------------------------------------


@njit(cache=True)
def wiener_shrink_numba(coeff, noise_var, windows):
    h, w = coeff.shape
    # zero-padded box means via a float64 integral image of the energy
    integ = np.zeros((h + 1, w + 1))
    for i in range(h):
        run = 0.0
        for j in range(w):
            c = np.float64(coeff[i, j])
            run += c * c
            integ[i + 1, j + 1] = integ[i, j + 1] + run
    out = np.empty((h, w), np.float32)
    for i in range(h):
        for j in range(w):
            best = np.inf
            for t in range(windows.size):
                size = windows[t]
                r = size // 2
                i0 = max(i - r, 0)
                i1 = min(i + r + 1, h)
                j0 = max(j - r, 0)
                j1 = min(j + r + 1, w)
                s = integ[i1, j1] - integ[i0, j1] - integ[i1, j0] + integ[i0, j0]
                v = s / (size * size) - noise_var
                if v < 0.0:
                    v = 0.0
                if v < best:
                    best = v
            out[i, j] = np.float32(np.float64(coeff[i, j]) * (best / (best + noise_var)))
    return out


def wiener_shrink_numpy(coeff, noise_var, windows):
    energy = np.square(coeff, dtype=np.float64)
    var = np.full(coeff.shape, np.inf)
    for size in windows:
        local = ndimage.uniform_filter(energy, size=int(size), mode="constant")
        np.minimum(var, np.maximum(local - noise_var, 0.0), out=var)
    return (coeff.astype(np.float64) * (var / (var + noise_var))).astype(np.float32)


# ---------------------------------------------------------------------------
# Masked accumulation of the fingerprint numerator / denominator
# ---------------------------------------------------------------------------


@njit(cache=True)
def accumulate_masked_numba(num, den, residual, frame, mask):
    h, w = num.shape
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                im = np.float64(frame[i, j])
                num[i, j] += np.float64(residual[i, j]) * im
                den[i, j] += im * im


def accumulate_masked_numpy(num, den, residual, frame, mask):
    im = frame.astype(np.float64) * (mask != 0)
    num += residual.astype(np.float64) * im
    den += im * im


# ---------------------------------------------------------------------------
# Non-linear exponential enhancement map
# ---------------------------------------------------------------------------


@njit(cache=True)
def gamma3_map_numba(k, alpha):
    flat = k.ravel()
    out = np.empty(flat.size, np.float64)
    top = -np.expm1(-alpha)
    for t in range(flat.size):
        x = np.float64(flat[t])
        if 0.0 <= x <= alpha:
            y = -np.expm1(-x)
        elif x > alpha:
            y = top * np.exp(alpha - x)
        elif x >= -alpha:
            y = np.expm1(x)
        else:
            y = -top * np.exp(alpha + x)
        out[t] = y
    return out.reshape(k.shape)


def gamma3_map_numpy(k, alpha):
    x = np.asarray(k, dtype=np.float64)
    out = np.full(x.shape, np.nan)
    top = -np.expm1(-alpha)
    lo = (x >= 0.0) & (x <= alpha)
    hi = x > alpha
    nlo = (x < 0.0) & (x >= -alpha)
    nhi = x < -alpha
    out[lo] = -np.expm1(-x[lo])
    out[hi] = top * np.exp(alpha - x[hi])
    out[nlo] = np.expm1(x[nlo])
    out[nhi] = -top * np.exp(alpha + x[nhi])
    return out


# ---------------------------------------------------------------------------
# Greedy average-linkage agglomeration over a similarity matrix
#
# Clusters live in the slot of their smallest leaf index, so "lexicographically
# smallest (min-leaf of u, min-leaf of v)" is simply the smallest (row, col) in
# the upper triangle. Pair sums are merged by addition; the linkage value is
# sum / (|u| |v|), computed identically in both variants.
# Returns (a, b, sim, size): scipy-style ids, leaves 0..n-1, merge t -> n + t.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rescan_row(sums, size, active, n, i, best_j, best_d):
    bj = -1
    bd = -np.inf
    for k in range(i + 1, n):
        if active[k]:
            d = sums[i, k] / (size[i] * size[k])
            if d > bd:
                bd = d
                bj = k
    best_j[i] = bj
    best_d[i] = bd


@njit(cache=True)
def average_linkage_numba(sim):
    n = sim.shape[0]
    sums = sim.copy()
    size = np.ones(n)
    active = np.ones(n, np.bool_)
    cid = np.arange(n)
    best_j = np.full(n, -1, np.int64)
    best_d = np.full(n, -np.inf)
    for i in range(n):
        _rescan_row(sums, size, active, n, i, best_j, best_d)

    out_a = np.empty(n - 1, np.int64)
    out_b = np.empty(n - 1, np.int64)
    out_s = np.empty(n - 1)
    out_n = np.empty(n - 1, np.int64)
    for step in range(n - 1):
        i = -1
        d = -np.inf
        for r in range(n):
            if active[r] and best_j[r] >= 0 and best_d[r] > d:
                d = best_d[r]
                i = r
        j = best_j[i]
        out_a[step] = cid[i]
        out_b[step] = cid[j]
        out_s[step] = d
        out_n[step] = np.int64(size[i] + size[j])

        for k in range(n):
            if active[k] and k != i and k != j:
                s = sums[i, k] + sums[j, k]
                sums[i, k] = s
                sums[k, i] = s
        size[i] += size[j]
        active[j] = False
        cid[i] = n + step

        _rescan_row(sums, size, active, n, i, best_j, best_d)
        for k in range(j):
            if not active[k] or k == i:
                continue
            if best_j[k] == i or best_j[k] == j:
                _rescan_row(sums, size, active, n, k, best_j, best_d)
            elif k < i:
                dk = sums[k, i] / (size[k] * size[i])
                if dk > best_d[k] or (dk == best_d[k] and i < best_j[k]):
                    best_d[k] = dk
                    best_j[k] = i
    return out_a, out_b, out_s, out_n


def average_linkage_numpy(sim):
    n = sim.shape[0]
    sums = np.array(sim, dtype=np.float64, copy=True)
    size = np.ones(n)
    active = np.ones(n, bool)
    cid = np.arange(n)
    upper = np.triu(np.ones((n, n), bool), k=1)
    out_a = np.empty(n - 1, np.int64)
    out_b = np.empty(n - 1, np.int64)
    out_s = np.empty(n - 1)
    out_n = np.empty(n - 1, np.int64)
    for step in range(n - 1):
        d = sums / np.outer(size, size)
        d[~(upper & active[:, None] & active[None, :])] = -np.inf
        i, j = divmod(int(np.argmax(d)), n)
        out_a[step] = cid[i]
        out_b[step] = cid[j]
        out_s[step] = d[i, j]
        out_n[step] = int(size[i] + size[j])

        others = active.copy()
        others[[i, j]] = False
        merged = sums[i, others] + sums[j, others]
        sums[i, others] = merged
        sums[others, i] = merged
        size[i] += size[j]
        active[j] = False
        cid[i] = n + step
    return out_a, out_b, out_s, out_n


if USE_NUMBA:
    wiener_shrink = wiener_shrink_numba
    accumulate_masked = accumulate_masked_numba
    gamma3_map = gamma3_map_numba
    average_linkage = average_linkage_numba
else:
    wiener_shrink = wiener_shrink_numpy
    accumulate_masked = accumulate_masked_numpy
    gamma3_map = gamma3_map_numpy
    average_linkage = average_linkage_numpy

VARIANTS = {
    "wiener_shrink": (wiener_shrink_numba, wiener_shrink_numpy),
    "accumulate_masked": (accumulate_masked_numba, accumulate_masked_numpy),
    "gamma3_map": (gamma3_map_numba, gamma3_map_numpy),
    "average_linkage": (average_linkage_numba, average_linkage_numpy),
}
