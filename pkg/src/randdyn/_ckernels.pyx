# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; must agree bit-for-bit with ``_pykernels``."""

from libc.stdint cimport uint64_t

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t TRIAL_MULT = 0xD1B54A32D192ED03ULL
cdef object MASK64 = (1 << 64) - 1


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _key(uint64_t seed, uint64_t trial) nogil:
    cdef uint64_t k1 = _mix(seed ^ GOLDEN)
    return _mix(k1 + (trial + 1) * TRIAL_MULT)


cdef inline Py_ssize_t _bucket(uint64_t u, const uint64_t[:] th) nogil:
    cdef Py_ssize_t lo = 0, hi = th.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < th[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def mix64(z):
    return _mix(<uint64_t>(z & MASK64))


def stream_key(seed, trial):
    return _key(<uint64_t>(seed & MASK64), <uint64_t>(trial & MASK64))


def draw_u64(seed, trial, position):
    cdef uint64_t key = _key(<uint64_t>(seed & MASK64), <uint64_t>(trial & MASK64))
    return _mix(key + (<uint64_t>(position & MASK64) + 1) * GOLDEN)


def draw_block(seed, trial, Py_ssize_t start, Py_ssize_t count):
    cdef uint64_t key = _key(<uint64_t>(seed & MASK64), <uint64_t>(trial & MASK64))
    cdef Py_ssize_t pos
    return [_mix(key + (<uint64_t>pos + 1) * GOLDEN) for pos in range(start, start + count)]


def sample_block(seed, trial, Py_ssize_t start, Py_ssize_t count, const uint64_t[:] thresholds):
    cdef uint64_t key = _key(<uint64_t>(seed & MASK64), <uint64_t>(trial & MASK64))
    cdef Py_ssize_t pos
    out = [0] * count
    for pos in range(count):
        out[pos] = _bucket(_mix(key + (<uint64_t>(start + pos) + 1) * GOLDEN), thresholds)
    return out


def count_block(seed, Py_ssize_t trial_start, Py_ssize_t n_trials, Py_ssize_t n,
                const uint64_t[:] thresholds):
    cdef uint64_t s = <uint64_t>(seed & MASK64)
    cdef Py_ssize_t n_cats = thresholds.shape[0] + 1
    cdef Py_ssize_t t, pos, c
    cdef uint64_t key
    cdef long long[256] row
    if n_cats > 256:
        raise ValueError("too many categories for the compiled kernel")
    rows = []
    for t in range(trial_start, trial_start + n_trials):
        with nogil:
            key = _key(s, <uint64_t>t)
            for c in range(n_cats):
                row[c] = 0
            for pos in range(n):
                row[_bucket(_mix(key + (<uint64_t>pos + 1) * GOLDEN), thresholds)] += 1
        rows.append([row[c] for c in range(n_cats)])
    return rows


def mul_packed(a_keys, a_coefs, b_keys, b_coefs):
    cdef dict out = {}
    cdef Py_ssize_t i, j, na = len(a_keys), nb = len(b_keys)
    cdef long long ka, k
    cdef list bk = [int(x) for x in b_keys]
    cdef list bc = list(b_coefs)
    cdef long long[:] bkeys
    cdef object ca, prev
    import array
    bkeys = array.array("q", bk)
    for i in range(na):
        ka = a_keys[i]
        ca = a_coefs[i]
        for j in range(nb):
            k = ka + bkeys[j]
            prev = out.get(k)
            if prev is None:
                out[k] = ca * bc[j]
            else:
                out[k] = prev + ca * bc[j]
    return {key: v for key, v in out.items() if v}
