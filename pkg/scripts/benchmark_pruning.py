"""Wall time of a scheme-B trajectory batch with and without pruning of lost atoms."""

import argparse
import time
from dataclasses import replace

from rydfilter.config import load_preset
from rydfilter.mcwf import TrajectorySimulator


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--atoms", type=int, default=6)
    p.add_argument("--trajectories", type=int, default=5)
    args = p.parse_args()
    cfg = load_preset("fig4").simulation(args.atoms)
    for prune in (True, False):
        sim = TrajectorySimulator(replace(cfg, prune=prune))
        t0 = time.perf_counter()
        for s in range(args.trajectories):
            sim.run(s)
        print(f"prune={prune}: {time.perf_counter() - t0:.2f} s for {args.trajectories} trajectories")


if __name__ == "__main__":
    main()
