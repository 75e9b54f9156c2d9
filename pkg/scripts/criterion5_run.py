"""Count determinant zeros of the ball well h=-10 in |lam| <= 4 and compare with the radial oracle."""

import argparse
import time

from resonance_bounds.counting import CountConfig, count_in_disk
from resonance_bounds.grids import ball_grid
from resonance_bounds.oracles import oracle_3d_radial, radial_total
from resonance_bounds.potentials import BallIndicator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radial", type=int, default=16)
    ap.add_argument("--degree", type=int, default=15)
    ap.add_argument("--azimuth", type=int, default=16)
    ap.add_argument("--r", type=float, default=4.0)
    args = ap.parse_args()
    V = BallIndicator(R=1.0, h=-10.0)
    grid = ball_grid(1.0, args.radial, args.degree, args.azimuth)
    for alpha, branch, heights in ((1, "polar", (1,)), (4, "principal", (1, -1, 1j, -1j))):
        t0 = time.perf_counter()
        rep = count_in_disk(V, grid, args.r, CountConfig(alpha=alpha, branch=branch, n_nodes=128))
        oracle = sum(radial_total(oracle_3d_radial(-10.0 * w, 1.0, rep.radius_used)) for w in heights)
        print(f"N={grid.size} alpha={alpha} {branch}: count {rep.n}, oracle {oracle}, {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
