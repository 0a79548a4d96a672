"""Numpy reference implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and bit-identical results for identical inputs.
"""
import numpy as np

_U64 = np.uint64


def gf_mul_array(a, b, n, poly):
    """Elementwise product in GF(2^n), n <= 64; ``poly`` omits the x^n term."""
    a = np.array(a, dtype=_U64, copy=True)
    b = np.array(b, dtype=_U64, copy=True)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    n = int(n)
    mask = _U64((1 << n) - 1)
    top = _U64(n - 1)
    poly = _U64(poly)
    one = _U64(1)
    res = np.zeros(a.shape, dtype=_U64)
    for _ in range(n):
        res ^= np.where(b & one, a, _U64(0))
        carry = (a >> top) & one
        a = (a << one) & mask
        a ^= np.where(carry.astype(bool), poly, _U64(0))
        b >>= one
    return res


def product_histogram(xs, ts, n, poly, m):
    """Counts of the low ``m`` bits of x*t over all pairs (x, t)."""
    xs = np.asarray(xs, dtype=_U64)
    ts = np.asarray(ts, dtype=_U64)
    counts = np.zeros(1 << m, dtype=np.int64)
    low = _U64((1 << m) - 1)
    step = max(1, (1 << 20) // max(1, len(ts)))
    for start in range(0, len(xs), step):
        chunk = xs[start:start + step]
        prod = gf_mul_array(chunk[:, None], ts[None, :], n, poly)
        counts += np.bincount((prod & low).astype(np.int64).ravel(), minlength=1 << m)
    return counts


def draw_setting_bits(bit_probs, ubits):
    """Sequentially draw four bits per setting; returns settings as uint8.

    ``bit_probs[k, prefix]`` is the probability that bit k is 1 given the
    big-endian code of the k bits already drawn in this setting.
    """
    bit_probs = np.asarray(bit_probs, dtype=np.float64)
    ubits = np.asarray(ubits, dtype=np.float64)
    prefix = np.zeros(ubits.shape[0], dtype=np.int64)
    for k in range(4):
        p = bit_probs[k, prefix]
        prefix = (prefix << 1) | (ubits[:, k] < p)
    return prefix.astype(np.uint8)


def sample_outcomes(settings, cdf, uout):
    """Inverse-CDF sampling: outcome = min{x : u < cdf[setting, x]}."""
    cdf = np.asarray(cdf, dtype=np.float64)
    settings = np.asarray(settings, dtype=np.int64)
    uout = np.asarray(uout, dtype=np.float64)
    rows = cdf[settings]
    out = (rows <= uout[:, None]).sum(axis=1)
    return np.minimum(out, 15).astype(np.uint8)


def bell_count(settings, outcomes, table):
    table = np.asarray(table, dtype=np.uint8)
    return int(table[np.asarray(settings, dtype=np.int64), np.asarray(outcomes, dtype=np.int64)].sum())


def simulate_iid_rounds(bit_probs, cdf, ubits, uout, table):
    settings = draw_setting_bits(bit_probs, ubits)
    outcomes = sample_outcomes(settings, cdf, uout)
    return settings, outcomes, bell_count(settings, outcomes, table)


def pivot_inplace(T, r, c):
    """Gauss-Jordan pivot of the tableau ``T`` on entry (r, c)."""
    piv = T[r] / T[r, c]
    T[r] = piv
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.outer(col[nz], piv)
