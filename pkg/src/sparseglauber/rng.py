"""Counter-based random number generation (Philox4x64-10).

All randomness in the samplers is addressed, never streamed: a draw is a pure
function of (key, counter), so a chain can be replayed from any step and a
batch of chains can evaluate the same step for every chain in one vectorised
call.  The generator is the reference Philox4x64-10; scalar draws (pure
Python) and batched draws (numpy uint64) produce identical words, and both
match ``numpy.random.Philox`` output for the same counter/key.

Counter layout used by the samplers (RNG_TAG documents it in manifests):

    ctr = [index0, index1, phase, 0],  key = [seed, DOMAIN]

where ``phase`` separates independent draw families (site selection, spin
resampling, finalisation, ...) and index0/index1 address the draw within the
family.  Each evaluation yields four 64-bit words.
"""

from __future__ import annotations

import numpy as np

RNG_TAG = "philox4x64-10/sg1"

# Domain-separation constant mixed into the second key word (v1 layout).
DOMAIN_KEY = 0x53474C4200000001

_MASK64 = (1 << 64) - 1
_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B

# Draw phases (counter word 2).
PHASE_MAIN = 0       # main loop: word0 = resample uniform, words 1.. = site pick
PHASE_SITE = 1       # standalone bounded-integer picks (block selection)
PHASE_RESAMPLE = 2   # standalone uniforms within a step
PHASE_FINAL = 3      # finalisation / perfect sampling, indexed by component
PHASE_GEN = 4        # graph generation (geometric skip stream)

_INV_2_53 = 2.0 ** -53


def philox4x64(ctr, key):
    """One Philox4x64-10 block: 4 counter words + 2 key words -> 4 words.

    Pure-Python reference path; used off the hot loops and as the ground
    truth the vectorised path is tested against.
    """
    c0, c1, c2, c3 = ctr
    k0, k1 = key
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0 = ((p1 >> 64) ^ c1 ^ k0) & _MASK64
        c1 = p1 & _MASK64
        c2 = ((p0 >> 64) ^ c3 ^ k1) & _MASK64
        c3 = p0 & _MASK64
        k0 = (k0 + _W0) & _MASK64
        k1 = (k1 + _W1) & _MASK64
    return c0, c1, c2, c3


def _mulhilo(a, b):
    # 64x64 -> 128 product via 32-bit limbs (numpy uint64 wraps silently).
    mask32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    ah, al = a >> s32, a & mask32
    bh, bl = b >> s32, b & mask32
    ll = al * bl
    lh = al * bh
    hl = ah * bl
    carry = ((ll >> s32) + (lh & mask32) + (hl & mask32)) >> s32
    hi = ah * bh + (lh >> s32) + (hl >> s32) + carry
    lo = a * b
    return hi, lo


def philox4x64_batch(c0, c1, c2, c3, k0, k1):
    """Vectorised Philox4x64-10 over numpy uint64 arrays (broadcastable).

    Returns the four output word arrays.
    """
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    c2 = np.asarray(c2, dtype=np.uint64)
    c3 = np.asarray(c3, dtype=np.uint64)
    k0 = np.asarray(k0, dtype=np.uint64)
    k1 = np.asarray(k1, dtype=np.uint64)
    c0, c1, c2, c3, k0, k1 = np.broadcast_arrays(c0, c1, c2, c3, k0, k1)
    c0, c1, c2, c3 = c0.copy(), c1.copy(), c2.copy(), c3.copy()
    k0, k1 = k0.copy(), k1.copy()
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    w0 = np.uint64(_W0)
    w1 = np.uint64(_W1)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(m0, c0)
            hi1, lo1 = _mulhilo(m1, c2)
            c0 = hi1 ^ c1 ^ k0
            c1 = lo1
            c2 = hi0 ^ c3 ^ k1
            c3 = lo0
            k0 = k0 + w0
            k1 = k1 + w1
    return c0, c1, c2, c3


def uniform_from_word(word):
    """Map a 64-bit word to a float in [0, 1) with 53-bit resolution."""
    return (word >> 11) * _INV_2_53


class PhiloxStream:
    """Addressed draws for a single chain, keyed by a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._key = (self.seed, DOMAIN_KEY)

    def words(self, index0: int, block: int, phase: int):
        return philox4x64((index0 & _MASK64, block & _MASK64, phase, 0), self._key)

    def word(self, index0: int, draw: int, phase: int) -> int:
        """The ``draw``-th 64-bit word of draw family (phase, index0)."""
        return self.words(index0, draw >> 2, phase)[draw & 3]

    def uniform(self, index0: int, draw: int, phase: int) -> float:
        return uniform_from_word(self.word(index0, draw, phase)) * 1.0

    def rand_below(self, n: int, index0: int, phase: int, first_draw: int = 0) -> int:
        """Unbiased integer in [0, n) by bit-masked rejection.

        Consumes words first_draw, first_draw+1, ... of the (phase, index0)
        family until one lands below n under the smallest covering bit mask.
        """
        if n <= 0:
            raise ValueError("rand_below needs n >= 1")
        mask = (1 << (n - 1).bit_length()) - 1 if n > 1 else 0
        draw = first_draw
        while True:
            v = self.word(index0, draw, phase) & mask
            if v < n:
                return v
            draw += 1
            if draw - first_draw > 1024:  # pragma: no cover - astronomically unlikely
                raise RuntimeError("bounded-integer rejection failed to terminate")


def batch_words(keys, index0, block, phase):
    """Vectorised ``PhiloxStream.words`` for an array of chain seeds.

    keys/index0 broadcast; returns the 4 word arrays.
    """
    k0 = np.asarray(keys, dtype=np.uint64)
    return philox4x64_batch(index0, block, np.uint64(phase), np.uint64(0),
                            k0, np.uint64(DOMAIN_KEY))


def batch_rand_below(keys, n, index0, phase, first_draw=0):
    """Vectorised unbiased integers in [0, n), one per key (same bound n).

    Matches the scalar rejection sequence of ``PhiloxStream.rand_below`` for
    the same ``first_draw``.
    """
    if n <= 0:
        raise ValueError("batch_rand_below needs n >= 1")
    keys = np.asarray(keys, dtype=np.uint64)
    index0 = np.broadcast_to(np.asarray(index0, dtype=np.uint64), keys.shape)
    mask = np.uint64((1 << (n - 1).bit_length()) - 1 if n > 1 else 0)
    out = np.empty(keys.shape, dtype=np.int64)
    pending = np.ones(keys.shape, dtype=bool)
    draw = first_draw
    while pending.any():
        block = np.uint64(draw >> 2)
        w = batch_words(keys[pending], index0[pending], block, phase)[draw & 3]
        v = (w & mask).astype(np.int64)
        ok = v < n
        idx = np.flatnonzero(pending)
        out[idx[ok]] = v[ok]
        pending[idx[ok]] = False
        draw += 1
        if draw - first_draw > 1024:  # pragma: no cover
            raise RuntimeError("bounded-integer rejection failed to terminate")
    return out
