"""Deterministic random primitives shared by the encoder and the resampler.

Everything here is exactly specified integer arithmetic (FNV-1a, splitmix64)
so that two independent implementations produce bit-identical streams.
"""
from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """splitmix64 sequence; each next_u64() advances the state by the golden gamma."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + SPLITMIX_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_unit_interval(self) -> float:
        """Uniform in [-1, 1): (u / 2^64) * 2 - 1."""
        return (self.next_u64() / 2.0**64) * 2.0 - 1.0

    def next_open_unit(self) -> float:
        """Uniform in (0, 1], 53-bit resolution; safe as a log() argument."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def next_half_open_unit(self) -> float:
        """Uniform in [0, 1), 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53


def mix64(*values: int) -> int:
    """Fold integers into one 64-bit seed via the splitmix finalizer."""
    h = 0
    for v in values:
        sm = SplitMix64(h ^ (v & _MASK64))
        h = sm.next_u64()
    return h


class GaussianStream:
    """Standard normals via Box-Muller over a seeded splitmix64 stream."""

    __slots__ = ("_uniforms", "_spare")

    def __init__(self, seed: int):
        self._uniforms = SplitMix64(seed)
        self._spare: float | None = None

    def next_normal(self) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self._uniforms.next_open_unit()
        u2 = self._uniforms.next_half_open_unit()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, n: int) -> list[float]:
        return [self.next_normal() for _ in range(n)]
