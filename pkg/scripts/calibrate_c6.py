"""Pick the default C6 so sampled 5-atom ensembles stay deep in the blockade regime.

Two conditions, both for L = 2 um and the largest scheme-A linewidth among the presets:
  min_ij Delta(d_ij) >= 10 w_max   over 10^3 sampled geometries
  L <= (2/3) d_b
Sampled worst cases keep creeping toward the cube diagonal sqrt(3) L as the sample
count grows, so the recommendation uses the diagonal itself. That holds for every geometry.
"""

import argparse

import numpy as np

from rydfilter.config import load_preset
from rydfilter.geometry import (
    DEFAULT_BOX_SIDE,
    DEFAULT_C6,
    DEFAULT_MIN_SEPARATION,
    blockade_distance,
    min_blockade_ratio,
    sample_positions,
)


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--atoms", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    w_max = max(load_preset(name).w_max() for name in ("fig2", "fig3"))
    rng = np.random.default_rng(args.seed)
    # with C6 = 1 the smallest pair shift is 1 / d_max^6
    worst = min(
        min_blockade_ratio(
            sample_positions(args.atoms, DEFAULT_BOX_SIDE, DEFAULT_MIN_SEPARATION, rng, 1.0), 1.0
        )
        for _ in range(args.samples)
    )
    c6_blockade = 10.0 * w_max / worst
    c6_diagonal = 10.0 * w_max * (np.sqrt(3.0) * DEFAULT_BOX_SIDE) ** 6
    c6_distance = w_max * (1.5 * DEFAULT_BOX_SIDE) ** 6
    c6 = max(c6_blockade, c6_diagonal, c6_distance)
    print(f"w_max (scheme A presets)      {w_max:.3f} 1/us")
    print(f"worst d_max over samples      {worst ** (-1 / 6):.3f} um")
    print(f"C6 for 10 w_max blockade      {c6_blockade:.4g}")
    print(f"C6 for 10 w_max at diagonal   {c6_diagonal:.4g}")
    print(f"C6 for L <= 2/3 d_b           {c6_distance:.4g}")
    print(f"recommended                   {c6:.4g}")
    print(f"current default               {DEFAULT_C6:.4g}  (d_b = {blockade_distance(DEFAULT_C6, w_max):.2f} um)")


if __name__ == "__main__":
    main()
