"""Pure-Python hot kernels.

Reference implementation of everything in ``_ckernels.pyx``; the two must
produce identical results for identical inputs.  ``kernels.py`` picks the
compiled module when it imports and falls back to this one otherwise.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TRIAL_MULT = 0xD1B54A32D192ED03

BACKEND = "python"


def mix64(z):
    """splitmix64 finalizer (a bijection on 64-bit words)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, trial):
    k1 = mix64((seed & MASK64) ^ GOLDEN)
    return mix64((k1 + (trial + 1) * TRIAL_MULT) & MASK64)


def draw_u64(seed, trial, position):
    return mix64((stream_key(seed, trial) + (position + 1) * GOLDEN) & MASK64)


def draw_block(seed, trial, start, count):
    key = stream_key(seed, trial)
    out = []
    for pos in range(start, start + count):
        out.append(mix64((key + (pos + 1) * GOLDEN) & MASK64))
    return out


def _bucket(u, thresholds):
    # first i with u < thresholds[i]; len(thresholds) if none
    lo, hi = 0, len(thresholds)
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < thresholds[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def sample_block(seed, trial, start, count, thresholds):
    thresholds = list(thresholds)
    key = stream_key(seed, trial)
    out = []
    for pos in range(start, start + count):
        u = mix64((key + (pos + 1) * GOLDEN) & MASK64)
        out.append(_bucket(u, thresholds))
    return out


def count_block(seed, trial_start, n_trials, n, thresholds):
    """Per-trial category counts over positions ``0..n-1``."""
    thresholds = list(thresholds)
    n_cats = len(thresholds) + 1
    rows = []
    for t in range(trial_start, trial_start + n_trials):
        key = stream_key(seed, t)
        row = [0] * n_cats
        for pos in range(n):
            u = mix64((key + (pos + 1) * GOLDEN) & MASK64)
            row[_bucket(u, thresholds)] += 1
        rows.append(row)
    return rows


def mul_packed(a_keys, a_coefs, b_keys, b_coefs):
    out = {}
    get = out.get
    for ka, ca in zip(a_keys, a_coefs):
        for kb, cb in zip(b_keys, b_coefs):
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v}
