"""Pure-numpy fallback for the Monte-Carlo sampling kernel.

Consumes the BitGenerator stream through ``Generator.random((m, 3))``, which
fills row-major with consecutive ``next_double`` draws — the same order the
compiled kernel uses — so hit counts from the two backends are bit-identical.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 20


def count_hits(
    bit_generator,
    samples: int,
    r_a: float,
    r_b: float,
    d: float,
    x_lo: float,
    x_hi: float,
    rho: float,
) -> int:
    """Counts samples landing inside both spheres (see the compiled twin)."""
    gen = np.random.Generator(bit_generator)
    ra2 = r_a * r_a
    rb2 = r_b * r_b
    span = x_hi - x_lo
    two_rho = 2.0 * rho
    hits = 0
    remaining = int(samples)
    while remaining > 0:
        m = min(remaining, _CHUNK)
        u = gen.random((m, 3))
        x = x_lo + u[:, 0] * span
        y = u[:, 1] * two_rho - rho
        z = u[:, 2] * two_rho - rho
        t = y * y + z * z
        inside = (x * x + t <= ra2) & ((x - d) * (x - d) + t <= rb2)
        hits += int(np.count_nonzero(inside))
        remaining -= m
    return hits
