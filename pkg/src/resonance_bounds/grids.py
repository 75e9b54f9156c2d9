"""Quadrature rules on the sphere and weighted spatial grids for Nyström assembly.

Product grids built here are ordered ring-major: node ``ring * n_azimuth + a`` sits
at azimuth ``2*pi*a/n_azimuth`` about the grid's symmetry axis.  Operators whose
kernel depends only on ``|x - y|`` are then block-circulant in the azimuth index,
which :mod:`resonance_bounds.birman_schwinger` exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SphereRule:
    """Product Gauss-Legendre (polar) x trapezoid (azimuth) rule on the unit sphere.

    Exact for spherical harmonics of degree ``<= degree``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(values, self.weights, axes=([-1], [0]))


def sphere_rule(degree: int) -> SphereRule:
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n_polar = degree // 2 + 1
    n_az = degree + 1
    ct, wt = leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    st = np.sqrt(1.0 - ct**2)
    nodes = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(ct, n_az),
        ],
        axis=-1,
    )
    weights = np.repeat(wt, n_az) * (2.0 * np.pi / n_az)
    rule = SphereRule(nodes=nodes, weights=weights, degree=degree)
    _verify_sphere_rule(rule)
    return rule


def _verify_sphere_rule(rule: SphereRule) -> None:
    # zonal Legendre polynomials up to the degree; cheap and catches ordering bugs
    if abs(rule.weights.sum() - FOUR_PI) > 1e-12:
        raise RuntimeError("sphere rule weights do not sum to 4*pi")
    z = rule.nodes[:, 2]
    for ell in range(1, rule.degree + 1):
        c = np.zeros(ell + 1)
        c[-1] = 1.0
        if abs(np.dot(np.polynomial.legendre.legval(z, c), rule.weights)) > 1e-11:
            raise RuntimeError(f"sphere rule fails on P_{ell}")


def required_sphere_degree(lam: complex, diameter: float) -> int:
    """Degree needed to integrate exp(i*lam*z.xi) to ~1e-10 for |z| <= diameter."""
    return 2 * int(np.ceil(abs(lam) * diameter)) + 10


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    """Weighted nodes covering the support of a potential.

    ``newton_potential`` (optional) holds the Newtonian potential
    ``int_Omega dy / (4 pi |x_i - y|)`` of the covered region at every node; when
    present the Nyström diagonal uses singularity subtraction.
    ``n_azimuth``/``axis`` describe cyclic symmetry of a product grid.
    """

    nodes: np.ndarray
    weights: np.ndarray
    cell_radius: np.ndarray
    newton_potential: Optional[np.ndarray] = None
    n_azimuth: Optional[int] = None
    axis: int = 2
    region: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("nodes/weights shape mismatch")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.n_azimuth is not None and len(self.weights) % self.n_azimuth:
            raise ValueError("node count is not a multiple of n_azimuth")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    @property
    def n_rings(self) -> int:
        return self.size // self.n_azimuth

    @cached_property
    def laplace_rowsums(self) -> np.ndarray:
        """sum_{k != i} w_k / (4 pi |x_i - x_k|), computed once per grid."""
        x = self.nodes
        # on a cyclic grid every ring shares one value: evaluate azimuth 0 only
        rows = np.arange(self.size) if self.n_azimuth is None else np.arange(self.n_rings) * self.n_azimuth
        out = np.empty(len(rows))
        for s in range(0, len(rows), 256):
            block = rows[s : s + 256]
            d = np.linalg.norm(x[block, None, :] - x[None, :, :], axis=-1)
            d[np.arange(len(block)), block] = np.inf
            out[s : s + 256] = (self.weights[None, :] / (FOUR_PI * d)).sum(axis=1)
        if self.n_azimuth is not None:
            out = np.repeat(out, self.n_azimuth)
        return out

    def scaled(self, s: float) -> "SpaceGrid":
        """Grid for x -> s*x (weights scale by s**dim)."""
        npot = None if self.newton_potential is None else self.newton_potential * s**2
        region = dict(self.region)
        region["scale"] = region.get("scale", 1.0) * s
        return SpaceGrid(
            nodes=self.nodes * s,
            weights=self.weights * s**self.dim,
            cell_radius=self.cell_radius * s,
            newton_potential=npot,
            n_azimuth=self.n_azimuth,
            axis=self.axis,
            region=region,
        )


def _cell_radius(weights: np.ndarray) -> np.ndarray:
    return (3.0 * weights / FOUR_PI) ** (1.0 / 3.0)


def _composite_gauss(breaks, n_per_panel: int):
    x, w = leggauss(n_per_panel)
    pts, wts = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        pts.append(0.5 * (b - a) * x + 0.5 * (b + a))
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(pts), np.concatenate(wts)


def ball_grid(
    R: float,
    n_radial: int = 16,
    degree: int = 15,
    n_azimuth: Optional[int] = None,
    breaks=None,
    center=(0.0, 0.0, 0.0),
) -> SpaceGrid:
    """Radial Gauss-Legendre x (Gauss-Legendre in cos(theta) x trapezoid) grid on B(c, R).

    ``breaks`` splits the radial interval into panels (``n_radial`` nodes each
    panel); use it to align panels with jumps of a radial potential.
    """
    if breaks is None:
        breaks = [0.0, R]
    breaks = np.asarray(breaks, dtype=float)
    if breaks[0] != 0.0 or not np.isclose(breaks[-1], R) or np.any(np.diff(breaks) <= 0):
        raise ValueError("radial breaks must increase from 0 to R")
    r, wr = _composite_gauss(breaks, n_radial)
    wr = wr * r**2
    n_polar = degree // 2 + 1
    n_az = degree + 1 if n_azimuth is None else n_azimuth
    ct, wt = leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    st = np.sqrt(1.0 - ct**2)
    rr = np.repeat(r, n_polar * n_az)
    cc = np.tile(np.repeat(ct, n_az), len(r))
    ss = np.tile(np.repeat(st, n_az), len(r))
    pp = np.tile(phi, len(r) * n_polar)
    nodes = np.stack([rr * ss * np.cos(pp), rr * ss * np.sin(pp), rr * cc], axis=-1)
    weights = (wr[:, None, None] * wt[None, :, None] * np.full(n_az, 2.0 * np.pi / n_az)[None, None, :]).ravel()
    center = np.asarray(center, dtype=float)
    nodes = nodes + center
    newton = (3.0 * R**2 - rr**2) / 6.0
    return SpaceGrid(
        nodes=nodes,
        weights=weights,
        cell_radius=_cell_radius(weights),
        newton_potential=newton,
        n_azimuth=n_az if not np.any(center) else None,
        axis=2,
        region={"kind": "ball", "R": R, "center": tuple(center)},
    )


def union_grid(grids) -> SpaceGrid:
    """Concatenate grids of disjoint components (no symmetry retained)."""
    grids = list(grids)
    nodes = np.concatenate([g.nodes for g in grids])
    weights = np.concatenate([g.weights for g in grids])
    npot = None
    if all(g.newton_potential is not None for g in grids):
        npot = np.zeros(len(weights))
        for g in grids:
            if g.region.get("kind") != "ball":
                npot = None
                break
            npot = npot + ball_newton_potential(nodes, g.region["R"], g.region["center"])
    return SpaceGrid(
        nodes=nodes,
        weights=weights,
        cell_radius=_cell_radius(weights),
        newton_potential=npot,
        region={"kind": "union", "parts": [g.region for g in grids]},
    )


def ball_newton_potential(x: np.ndarray, R: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Newtonian potential int_{B(c,R)} dy / (4 pi |x - y|) (inside and outside)."""
    rho = np.linalg.norm(np.asarray(x) - np.asarray(center), axis=-1)
    inside = (3.0 * R**2 - rho**2) / 6.0
    with np.errstate(divide="ignore"):
        outside = R**3 / (3.0 * rho)
    return np.where(rho <= R, inside, outside)


def tube_grid(
    R: float,
    n_axial: int = 16,
    n_transverse: int = 8,
    n_azimuth: int = 16,
    newton_degree: int = 48,
) -> SpaceGrid:
    """Cylindrical grid on T_R = {|x1| <= R, |x'| <= sqrt(R)}, symmetric about the x1 axis.

    The Newtonian potential of the tube is evaluated by ray casting from each node
    (the tube is convex): int_{S^2} rho_max(x, w)^2 / (8 pi) dS(w).
    """
    a = np.sqrt(R)
    x1, w1 = leggauss(n_axial)
    x1, w1 = R * x1, R * w1
    rt, wt = leggauss(n_transverse)
    rt = 0.5 * a * (rt + 1.0)
    wt = 0.5 * a * wt * rt
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    X1 = np.repeat(x1, n_transverse * n_azimuth)
    RT = np.tile(np.repeat(rt, n_azimuth), n_axial)
    PP = np.tile(phi, n_axial * n_transverse)
    nodes = np.stack([X1, RT * np.cos(PP), RT * np.sin(PP)], axis=-1)
    weights = (w1[:, None, None] * wt[None, :, None] * np.full(n_azimuth, 2.0 * np.pi / n_azimuth)).ravel()
    newton = _tube_newton_potential(nodes, R, a, newton_degree)
    return SpaceGrid(
        nodes=nodes,
        weights=weights,
        cell_radius=_cell_radius(weights),
        newton_potential=newton,
        n_azimuth=n_azimuth,
        axis=0,
        region={"kind": "tube", "R": R},
    )


def _tube_newton_potential(x: np.ndarray, R: float, a: float, degree: int) -> np.ndarray:
    rule = sphere_rule(degree)
    w = rule.nodes
    out = np.empty(len(x))
    for i, p in enumerate(x):
        # exit distance through the caps |x1| = R
        with np.errstate(divide="ignore", invalid="ignore"):
            t_cap = np.where(w[:, 0] > 0, (R - p[0]) / w[:, 0], np.where(w[:, 0] < 0, (-R - p[0]) / w[:, 0], np.inf))
            # exit through the lateral surface |x'| = a
            A = w[:, 1] ** 2 + w[:, 2] ** 2
            B = p[1] * w[:, 1] + p[2] * w[:, 2]
            C = p[1] ** 2 + p[2] ** 2 - a**2
            t_lat = np.where(A > 0, (-B + np.sqrt(np.maximum(B**2 - A * C, 0.0))) / A, np.inf)
        t = np.minimum(t_cap, t_lat)
        out[i] = np.dot(t**2, rule.weights) / (8.0 * np.pi)
    return out


def cartesian_grid(points: np.ndarray, weights: np.ndarray) -> SpaceGrid:
    """Wrap arbitrary nodes/weights (no symmetry, cell-averaged diagonal)."""
    weights = np.asarray(weights, dtype=float)
    return SpaceGrid(nodes=np.asarray(points, dtype=float), weights=weights, cell_radius=_cell_radius(weights))
