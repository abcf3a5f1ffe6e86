"""Hot numeric kernels with a numba path and a pure-numpy path.

Every kernel exists twice: a loop version compiled with numba (``_nb_*``) and
a vectorised numpy version (``_np_*``). Uniforms, outcome indices and
enumeration sums are bit-identical across the two; Gaussian draws agree to a
few ulps (libm versus numpy transcendental functions). The public wrappers route to one or the other according to
``_accel.USE_NUMBA``.

Random numbers come from a counter-based hash: the uniform for
``(seed, path, counter)`` is a pure function of those three integers, so
any split of the paths across workers reproduces the same draws.
"""

import numpy as np

from . import _accel
from ._accel import njit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_U_GAMMA = np.uint64(GAMMA)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U_ONE = np.uint64(1)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def run_key(seed):
    """Reduce an arbitrary 64-bit seed (signed or unsigned) to the per-run key."""
    return _mix_int(int(seed) & MASK64)


def _mix_int(z):
    # splitmix64 finaliser on Python ints; the reference the kernels are tested against
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def uniform_reference(key, path, counter):
    """Scalar pure-Python uniform draw, used as an oracle for the kernels."""
    pk = _mix_int(key + (path + 1) * GAMMA)
    return (_mix_int(pk + (counter + 1) * GAMMA) >> 11) * _INV53


# --------------------------------------------------------------------------
# numba kernels

@njit
def _nb_mix(z):
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


@njit
def _nb_path_key(key, path):
    return _nb_mix(key + (np.uint64(path) + _U_ONE) * _U_GAMMA)


@njit
def _nb_uniform(pkey, counter):
    bits = _nb_mix(pkey + (np.uint64(counter) + _U_ONE) * _U_GAMMA)
    return np.float64(bits >> _S11) * _INV53


@njit
def _nb_uniforms(key, path0, count, counters):
    out = np.empty((count, counters))
    for i in range(count):
        pk = _nb_path_key(key, path0 + i)
        for c in range(counters):
            out[i, c] = _nb_uniform(pk, c)
    return out


@njit
def _nb_discrete_indices(cdf, n, key, path0, count):
    m = cdf.shape[0]
    out = np.empty((count, n), dtype=np.int32)
    for i in range(count):
        pk = _nb_path_key(key, path0 + i)
        for j in range(n):
            u = _nb_uniform(pk, j)
            k = 0
            while k < m - 1 and cdf[k] <= u:
                k += 1
            out[i, j] = k
    return out


@njit
def _nb_standard_normals(n, d, key, path0, count):
    out = np.empty((count, n, d))
    two_pi = 2.0 * np.pi
    for i in range(count):
        pk = _nb_path_key(key, path0 + i)
        for j in range(n):
            for k in range(d):
                c = 2 * (j * d + k)
                u1 = _nb_uniform(pk, c)
                u2 = _nb_uniform(pk, c + 1)
                out[i, j, k] = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(two_pi * u2)
    return out


@njit
def _nb_enumerate(probs, incs, n):
    # Lexicographic odometer over all m**n sequences, first trial most significant.
    m = probs.shape[0]
    digits = np.zeros(n, dtype=np.int64)
    pp = np.empty(n + 1)
    ss = np.empty(n + 1)
    pp[0] = 1.0
    ss[0] = 0.0
    for lev in range(n):
        if lev == 0:
            pp[1] = probs[0]
            ss[1] = incs[0]
        else:
            pp[lev + 1] = pp[lev] * probs[0]
            ss[lev + 1] = ss[lev] + incs[0]
    total = 0.0
    mass = 0.0
    while True:
        total += pp[n] * ss[n]
        mass += pp[n]
        j = n - 1
        while j >= 0 and digits[j] == m - 1:
            digits[j] = 0
            j -= 1
        if j < 0:
            break
        digits[j] += 1
        for lev in range(j, n):
            i = digits[lev]
            if lev == 0:
                pp[1] = probs[i]
                ss[1] = incs[i]
            else:
                pp[lev + 1] = pp[lev] * probs[i]
                ss[lev + 1] = ss[lev] + incs[i]
    return total, mass


# --------------------------------------------------------------------------
# numpy kernels

def _np_mix(z):
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


def _np_path_keys(key, path0, count):
    paths = np.arange(path0, path0 + count, dtype=np.uint64)
    return _np_mix(np.uint64(key) + (paths + _U_ONE) * _U_GAMMA)


def _np_uniform(pkeys, counter):
    bits = _np_mix(pkeys + np.uint64(((counter + 1) * GAMMA) & MASK64))
    return (bits >> _S11).astype(np.float64) * _INV53


def _np_uniforms(key, path0, count, counters):
    pk = _np_path_keys(key, path0, count)
    out = np.empty((count, counters))
    for c in range(counters):
        out[:, c] = _np_uniform(pk, c)
    return out


def _np_discrete_indices(cdf, n, key, path0, count):
    m = cdf.shape[0]
    pk = _np_path_keys(key, path0, count)
    out = np.empty((count, n), dtype=np.int32)
    for j in range(n):
        u = _np_uniform(pk, j)
        out[:, j] = np.minimum(np.searchsorted(cdf, u, side="right"), m - 1)
    return out


def _np_standard_normals(n, d, key, path0, count):
    pk = _np_path_keys(key, path0, count)
    out = np.empty((count, n, d))
    two_pi = 2.0 * np.pi
    for j in range(n):
        for k in range(d):
            c = 2 * (j * d + k)
            u1 = _np_uniform(pk, c)
            u2 = _np_uniform(pk, c + 1)
            out[:, j, k] = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(two_pi * u2)
    return out


_BLOCK_LEAVES = 1 << 16


def _np_enumerate(probs, incs, n):
    m = probs.shape[0]
    # expand the top levels serially, the bottom `tail` levels as vector blocks
    tail = n
    while tail > 1 and m ** tail > _BLOCK_LEAVES:
        tail -= 1
    head = n - tail
    total = 0.0
    mass = 0.0
    for prefix in np.ndindex(*([m] * head)) if head else [()]:
        if head:
            p = probs[prefix[0]]
            s = incs[prefix[0]]
            for i in prefix[1:]:
                p = p * probs[i]
                s = s + incs[i]
            P = p * probs
            S = s + incs
        else:
            P = probs.copy()
            S = incs.copy()
        for _ in range(tail - 1):
            P = (P[:, None] * probs[None, :]).ravel()
            S = (S[:, None] + incs[None, :]).ravel()
        # cumsum is a strict left-to-right accumulation, matching the loop kernel
        total = np.cumsum(np.concatenate(([total], P * S)))[-1]
        mass = np.cumsum(np.concatenate(([mass], P)))[-1]
    return float(total), float(mass)


# --------------------------------------------------------------------------
# dispatch

def _pick(nb, np_):
    return nb if _accel.USE_NUMBA else np_


def uniforms(key, path0, count, counters, backend=None):
    """``(count, counters)`` uniforms in [0, 1) for paths ``path0 .. path0+count-1``."""
    fn = _select(backend, _nb_uniforms, _np_uniforms)
    return fn(np.uint64(key), int(path0), int(count), int(counters))


def discrete_indices(cdf, n, key, path0, count, backend=None):
    """Inverse-CDF outcome indices, shape ``(count, n)``; step ``j`` uses counter ``j``."""
    fn = _select(backend, _nb_discrete_indices, _np_discrete_indices)
    return fn(np.ascontiguousarray(cdf, dtype=np.float64), int(n), np.uint64(key), int(path0), int(count))


def standard_normals(n, d, key, path0, count, backend=None):
    """Box-Muller N(0, I_d) draws, shape ``(count, n, d)``."""
    fn = _select(backend, _nb_standard_normals, _np_standard_normals)
    return fn(int(n), int(d), np.uint64(key), int(path0), int(count))


def enumerate_constant(probs, incs, n, backend=None):
    """Exact ``(sum_leaves P*S, sum_leaves P)`` over all ``m**n`` sequences."""
    fn = _select(backend, _nb_enumerate, _np_enumerate)
    total, mass = fn(np.ascontiguousarray(probs, dtype=np.float64),
                     np.ascontiguousarray(incs, dtype=np.float64), int(n))
    return float(total), float(mass)


def _select(backend, nb, np_):
    if backend is None:
        return _pick(nb, np_)
    if backend == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return nb
    if backend == "numpy":
        return np_
    raise ValueError(f"unknown backend {backend!r}")
