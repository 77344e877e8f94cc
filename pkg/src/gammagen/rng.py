"""Seedable uniform source with independent substreams.

The generator is xoshiro256** (period 2**256 - 1).  Its 256-bit state is
filled from a 64-bit key with SplitMix64, and substream keys are derived by
mixing the parent key with the substream index, so every stream is a pure
function of ``(seed, index path)`` and never depends on how many values
were drawn elsewhere.

Uniforms use the top 53 bits of each output plus half an ulp::

    u = (bits + 0.5) * 2**-53,    0 < u < 1

so ``log(u)`` is always finite.  The numba kernels below (``next_raw``,
``next_u01``) are shared by the samplers, which keep the four state words
in registers for the duration of a batch.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ROOT_SALT = 0x2545F4914F6CDD1D
_CHILD_SALT = 0xD1B54A32D192ED03

INV_2_53 = 1.0 / 9007199254740992.0


def _fmix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _splitmix_state(key: int) -> np.ndarray:
    words = []
    x = key
    for _ in range(4):
        x = (x + _GOLDEN) & _MASK64
        words.append(_fmix64(x))
    if not any(words):
        words[0] = 1
    return np.array(words, dtype=np.uint64)


def _check_u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= _MASK64:
        raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value}")
    return value


# ---------------------------------------------------------------------------
#  numba kernels
# ---------------------------------------------------------------------------

@njit(inline="always")
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(inline="always")
def next_raw(s0, s1, s2, s3):
    """One xoshiro256** step: returns ``(output, s0, s1, s2, s3)``."""
    out = _rotl(s1 * uint64(5), 7) * uint64(9)
    t = s1 << uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    return out, s0, s1, s2, s3


@njit(inline="always")
def next_u01(s0, s1, s2, s3):
    """One open-interval uniform: returns ``(u, s0, s1, s2, s3)``."""
    out, s0, s1, s2, s3 = next_raw(s0, s1, s2, s3)
    return (float(out >> uint64(11)) + 0.5) * INV_2_53, s0, s1, s2, s3


@njit(cache=True)
def _fill_uniforms(state, out):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(out.size):
        u, s0, s1, s2, s3 = next_u01(s0, s1, s2, s3)
        out[i] = u
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3


@njit(cache=True)
def _fill_raw(state, out):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(out.size):
        r, s0, s1, s2, s3 = next_raw(s0, s1, s2, s3)
        out[i] = r
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3


# ---------------------------------------------------------------------------
#  Public API
# ---------------------------------------------------------------------------

class UniformSource:
    """Deterministic stream of uniforms on the open interval (0, 1).

    A source is single-owner; give each worker its own :meth:`substream`.
    """

    def __init__(self, seed: int = 0, path: tuple[int, ...] = ()):
        self.seed = _check_u64(seed, "seed")
        self.path = tuple(_check_u64(i, "substream index") for i in path)
        key = _fmix64(self.seed ^ _ROOT_SALT)
        for index in self.path:
            key = _fmix64((key + (index + 1) * _CHILD_SALT) & _MASK64)
        self._key = key
        self.state = _splitmix_state(key)

    def __repr__(self) -> str:
        return f"UniformSource(seed={self.seed}, path={self.path})"

    def next_uniform(self) -> float:
        out = np.empty(1)
        _fill_uniforms(self.state, out)
        return float(out[0])

    def uniforms(self, n: int) -> np.ndarray:
        """Draw ``n`` uniforms; equivalent to ``n`` calls of :meth:`next_uniform`."""
        out = np.empty(int(n))
        _fill_uniforms(self.state, out)
        return out

    def raw(self, n: int) -> np.ndarray:
        out = np.empty(int(n), dtype=np.uint64)
        _fill_raw(self.state, out)
        return out

    def substream(self, index: int) -> UniformSource:
        """Independent child stream; depends on (seed, path, index) only."""
        return UniformSource(self.seed, self.path + (index,))


def seed_stream(seed: int = 0) -> UniformSource:
    return UniformSource(seed)


def next_uniform(source: UniformSource) -> float:
    return source.next_uniform()


def substream(source: UniformSource, index: int) -> UniformSource:
    return source.substream(index)
