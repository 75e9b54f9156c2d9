"""Singular-value decay fits: power law on the real axis, stretched exponential for the kernel difference."""

import math

from resonance_bounds.birman_schwinger import SingularSpectrum, assemble_bs, bs_difference, fit_decay
from resonance_bounds.grids import ball_grid
from resonance_bounds.potentials import BallIndicator


def main():
    V = BallIndicator(R=1.0, h=1.0)
    grid = ball_grid(1.0, 12, 11, 12)
    for lam in (2.0, 4.0, 8.0):
        f = fit_decay(SingularSpectrum(assemble_bs(V, grid, lam).singular_values), "power", k_min=5, k_max=grid.size // 4)
        print(f"power   lam={lam:<5g} slope={f.slope:.3f} r2={f.r2:.4f}")
    mod = abs(3 - 0.5j)
    for im in (-0.25, -0.5, -0.75, -1.0):
        lam = complex(math.sqrt(mod**2 - im**2), im)
        f = fit_decay(SingularSpectrum(bs_difference(V, grid, lam).singular_values), "stretched_exp")
        print(f"stretch Im lam={im:<6g} slope={f.slope:.3f} r2={f.r2:.4f} n={f.n_used}")


if __name__ == "__main__":
    main()
