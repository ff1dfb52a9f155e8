"""Portable, reproducible random streams.

Seeding uses splitmix64; draws come from a bank of xoshiro256++ generators
advanced in lockstep so numpy can vectorise them. The output sequence is a
pure function of ``(seed, stream)`` and of the order of calls.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
LANES = 64
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def mix(*keys: int) -> int:
    """Fold integer keys into one 64-bit value (order-sensitive)."""
    h = 0
    for k in keys:
        _, h = splitmix64((h ^ (int(k) & MASK64)) & MASK64)
    return h


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Rng:
    """Deterministic generator keyed by ``(seed, stream)``.

    >>> Rng(1, 0).uniform(3).tolist() == Rng(1, 0).uniform(3).tolist()
    True
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        if not (0 <= int(seed) <= MASK64 and 0 <= int(stream) <= MASK64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream = int(stream)
        sm = mix(self.seed, self.stream)
        words = []
        for _ in range(4 * LANES):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s = np.array(words, dtype=np.uint64).reshape(4, LANES)
        self._buf = np.empty(0, dtype=np.uint64)

    def spawn(self, *keys: int) -> "Rng":
        """Independent child stream; ``stream = mix(stream, *keys)``."""
        return Rng(self.seed, mix(self.stream, *keys))

    def _block(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        out = _rotl(s0 + s3, 23) + s0
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3[:] = _rotl(s3, 45)
        return out

    def next_u64(self, n: int) -> np.ndarray:
        n = int(n)
        have = self._buf.size
        if have < n:
            nblocks = -(-(n - have) // LANES)
            blocks = [self._block() for _ in range(nblocks)]
            self._buf = np.concatenate([self._buf, *blocks])
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) with 53 random bits."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """Standard normals by the polar Box-Muller method."""
        n = int(n)
        chunks = []
        got = 0
        while got < n:
            pairs = max(8, int((n - got) * 0.65) + 8)
            u = 2.0 * self.uniform(2 * pairs) - 1.0
            a, b = u[0::2], u[1::2]
            s = a * a + b * b
            ok = (s > 0.0) & (s < 1.0)
            a, b, s = a[ok], b[ok], s[ok]
            f = np.sqrt(-2.0 * np.log(s) / s)
            z = np.empty(2 * a.size)
            z[0::2] = a * f
            z[1::2] = b * f
            chunks.append(z)
            got += z.size
        return np.concatenate(chunks)[:n] if chunks else np.empty(0)

    def poisson(self, rate) -> np.ndarray:
        """Poisson counts: Knuth for rate <= 256, rounded normal above."""
        rate = np.asarray(rate, dtype=np.float64)
        if np.any(rate < 0) or not np.all(np.isfinite(rate)):
            raise ValueError("Poisson rates must be finite and non-negative")
        flat = rate.ravel()
        out = np.zeros(flat.size, dtype=np.float64)
        big = np.flatnonzero(flat > 256.0)
        if big.size:
            m = flat[big]
            out[big] = np.maximum(0.0, np.round(m + np.sqrt(m) * self.normal(big.size)))
        small = np.flatnonzero(flat <= 256.0)
        if small.size:
            out[small] = self._knuth(flat[small])
        return out.reshape(rate.shape)

    def _knuth(self, m: np.ndarray) -> np.ndarray:
        limit = np.exp(-m)
        k = np.zeros(m.size)
        p = np.ones(m.size)
        active = np.arange(m.size)
        while active.size:
            p[active] *= self.uniform(active.size)
            done = p[active] <= limit[active]
            k[active[~done]] += 1.0
            active = active[~done]
        return k


def as_rng(rng: "Rng | int | None", stream: int = 0) -> Rng:
    if isinstance(rng, Rng):
        return rng
    return Rng(0 if rng is None else int(rng), stream)


def log_uniform(rng: Rng, n: int, lo: float, hi: float) -> np.ndarray:
    return np.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * rng.uniform(n))
