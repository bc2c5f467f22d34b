"""Self-contained deterministic random generator.

A splitmix64 stream feeds uniforms and Box-Muller normals.  Keeping the
generator in-package pins the sample streams across platforms and library
versions, which the byte-identical-output guarantees rely on.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK
        self._spare_normal = None

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in (0, 1); never returns exactly 0, so it is log-safe."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53)) or 5e-324

    def normal(self) -> float:
        """Standard normal via Box-Muller, caching the second deviate."""
        if self._spare_normal is not None:
            value, self._spare_normal = self._spare_normal, None
            return value
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> list:
        return [self.normal() for _ in range(n)]

    def fork(self, tag: int) -> "SplitMix64":
        """Independent child stream, decorrelated from the parent."""
        return SplitMix64(self.next_u64() ^ (tag * 0xD1B54A32D192ED03))
