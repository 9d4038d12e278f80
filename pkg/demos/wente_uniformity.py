"""Wente ratio against the inner radius for a few random data pairs, at two
outer measuring radii.  The ratio rises with r^-1 and saturates: it stays
bounded, but at r = 0.1 the measuring annulus is thin, so max/min is large.

    python demos/wente_uniformity.py
"""
import numpy as np

from necklab.elliptic import SineSum, wente_sweep
from necklab.fields import Grid

rng = np.random.default_rng(5)
disc = Grid.disc(1.0, 256, 128)
radii = [1e-1, 1e-2, 1e-3, 1e-4]

for lam in (0.35, 0.49):
    print(f"lambda = {lam}")
    for i in range(4):
        a, b = SineSum.random(rng), SineSum.random(rng)
        ratios = [r["ratio"] for r in wente_sweep(a, b, radii, lam, disc=disc)]
        row = " ".join(f"{x:8.4f}" for x in ratios)
        print(f"  pair {i}: {row}   spread {max(ratios) / min(ratios):.2f}")
