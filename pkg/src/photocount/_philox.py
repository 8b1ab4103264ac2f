"""Counter-based random numbers for the Monte Carlo kernels.

Every variate is a pure function of ``(seed, domain, trajectory, step)``:
the Philox4x32-10 block cipher (Salmon et al., Random123) maps the counter
``(step // 2, trajectory, domain, attempt)`` under the 64-bit key ``seed``
to four 32-bit words, enough for the normals and uniforms of two steps. Trajectories can therefore be simulated in any order, on any
number of threads, and still produce bit-identical output.
"""

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_TWO_M32 = 1.0 / 4294967296.0

# counters are 32-bit words; one block serves two steps
MAX_STEPS = 2**33
MAX_TRAJECTORIES = 2**32

# key domains; keep distinct so no two consumers share a stream
DOMAIN_FPT = 0
DOMAIN_SIGNAL = 1
DOMAIN_DETECTOR = 16


@njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox4x32 block. Words travel as uint64 holding 32-bit values."""
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _LO32
            k1 = (k1 + _W1) & _LO32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _S32) ^ c1 ^ k0) & _LO32, p1 & _LO32, ((p0 >> _S32) ^ c3 ^ k1) & _LO32, p0 & _LO32
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def normal_uniform_pair(seed, domain, trajectory, block):
    """Two standard normals and two independent U(0, 1) draws for one counter block.

    The normals come from Marsaglia's polar method; rejected attempts move
    on to the next value of the fourth counter word. The uniforms come from
    the two words the acceptance test does not look at, so they stay
    independent of the normals. All four have 32-bit resolution.
    """
    s = np.uint64(seed)
    c0 = np.uint64(block) & _LO32
    c1 = np.uint64(trajectory) & _LO32
    c2 = np.uint64(domain) & _LO32
    attempt = np.uint64(0)
    while True:
        w0, w1, w2, w3 = philox4x32(c0, c1, c2, attempt, s & _LO32, s >> _S32)
        a = 2.0 * (np.int64(w0) + 0.5) * _TWO_M32 - 1.0
        b = 2.0 * (np.int64(w1) + 0.5) * _TWO_M32 - 1.0
        r2 = a * a + b * b
        if r2 < 1.0:
            f = np.sqrt(-2.0 * np.log(r2) / r2)
            return a * f, b * f, (np.int64(w2) + 0.5) * _TWO_M32, (np.int64(w3) + 0.5) * _TWO_M32
        attempt += np.uint64(1)


@njit(cache=True, inline="always")
def normal_uniform(seed, domain, trajectory, step):
    """Normal and uniform for a single step: half of block ``step // 2``."""
    z0, z1, u0, u1 = normal_uniform_pair(seed, domain, trajectory, step >> 1)
    if step & 1:
        return z1, u1
    return z0, u0
