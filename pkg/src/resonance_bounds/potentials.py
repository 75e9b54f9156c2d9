"""Potentials V on R^d and the norms the counting bounds consume.

All norms act on |V|; complex heights keep their phase only for evaluation and
for the Birman-Schwinger factorization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .grids import SpaceGrid


class DivergentNormError(ValueError):
    """The requested norm is infinite for this potential."""


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"point dimension {x.shape[-1]} does not match potential dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


@dataclass(frozen=True)
class Potential:
    dim: int = 3

    def __post_init__(self):
        if self.dim < 1 or self.dim % 2 == 0:
            raise ValueError("dimension must be an odd integer >= 1")

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(_as_points(x, self.dim))

    def evaluate(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def is_radial(self) -> bool:
        return False

    @property
    def support_radius(self) -> float:
        """Radius of a centred ball containing the support (inf if unbounded)."""
        raise NotImplementedError

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class BallIndicator(Potential):
    R: float = 1.0
    h: complex = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.R <= 0:
            raise ValueError("ball radius must be positive")

    def evaluate(self, x):
        r = np.linalg.norm(x, axis=-1)
        return np.where(r <= self.R, complex(self.h), 0j)

    def profile(self, r):
        return np.where(np.asarray(r) <= self.R, abs(self.h), 0.0)

    @property
    def is_radial(self):
        return True

    @property
    def support_radius(self):
        return self.R

    @property
    def sup_norm(self):
        return abs(self.h)

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.dim) * self.R**self.dim


@dataclass(frozen=True)
class TubeIndicator(Potential):
    """h on T_R = {|x_1| <= R, |x'| <= R**0.5}."""

    R: float = 1.0
    h: complex = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.dim < 3:
            raise ValueError("tubes need dim >= 3")
        if self.R <= 0:
            raise ValueError("tube length must be positive")

    @property
    def transverse_radius(self) -> float:
        return math.sqrt(self.R)

    def evaluate(self, x):
        inside = (np.abs(x[..., 0]) <= self.R) & (
            np.linalg.norm(x[..., 1:], axis=-1) <= self.transverse_radius
        )
        return np.where(inside, complex(self.h), 0j)

    @property
    def support_radius(self):
        return math.hypot(self.R, self.transverse_radius)

    @property
    def sup_norm(self):
        return abs(self.h)

    @property
    def measure(self) -> float:
        return 2.0 * self.R * unit_ball_volume(self.dim - 1) * self.transverse_radius ** (self.dim - 1)


@dataclass(frozen=True)
class RadialTable(Potential):
    """Piecewise-constant radial potential: values[i] on radii[i] <= |x| < radii[i+1]."""

    radii: tuple = (0.0, 1.0)
    values: tuple = (1.0,)

    def __post_init__(self):
        super().__post_init__()
        r = np.asarray(self.radii, dtype=float)
        if len(self.values) != len(r) - 1:
            raise ValueError("need exactly one value per shell (len(values) == len(radii) - 1)")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing and nonnegative")
        object.__setattr__(self, "radii", tuple(float(v) for v in r))
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    def evaluate(self, x):
        return self._shell_values(np.linalg.norm(x, axis=-1), np.asarray(self.values))

    def _shell_values(self, r, vals):
        idx = np.searchsorted(self.radii, r, side="right") - 1
        ok = (idx >= 0) & (idx < len(self.values))
        # the outermost radius belongs to the last shell
        last = np.isclose(r, self.radii[-1])
        idx = np.where(last, len(self.values) - 1, idx)
        ok = ok | last
        return np.where(ok, vals[np.clip(idx, 0, len(vals) - 1)], 0)

    def profile(self, r):
        return np.real(self._shell_values(np.asarray(r, dtype=float), np.abs(np.asarray(self.values))))

    @property
    def is_radial(self):
        return True

    @property
    def support_radius(self):
        return self.radii[-1]

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SparseSum(Potential):
    """Sum of heights on pairwise disjoint closed balls: terms = ((center, radius, height), ...)."""

    terms: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        terms = tuple(
            (tuple(float(c) for c in center), float(radius), complex(height))
            for center, radius, height in self.terms
        )
        object.__setattr__(self, "terms", terms)
        for center, radius, _ in terms:
            if len(center) != self.dim:
                raise ValueError("center dimension mismatch")
            if radius <= 0:
                raise ValueError("ball radii must be positive")
        for i, (ci, ri, _) in enumerate(terms):
            for cj, rj, _ in terms[i + 1 :]:
                gap = np.linalg.norm(np.subtract(ci, cj)) - ri - rj
                if gap <= 0:
                    raise ValueError("sparse components must have disjoint closures")

    def evaluate(self, x):
        out = np.zeros(x.shape[:-1], dtype=complex)
        for center, radius, height in self.terms:
            out = out + np.where(np.linalg.norm(x - np.asarray(center), axis=-1) <= radius, height, 0j)
        return out

    @property
    def support_radius(self):
        return max((np.linalg.norm(c) + r for c, r, _ in self.terms), default=0.0)

    @property
    def sup_norm(self):
        return max((abs(h) for _, _, h in self.terms), default=0.0)


@dataclass(frozen=True)
class ExpProfile(Potential):
    """V(x) = h * exp(-c |x|**(1 + eps))."""

    c: float = 1.0
    eps: float = 1.0
    h: complex = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    def evaluate(self, x):
        r = np.linalg.norm(x, axis=-1)
        return complex(self.h) * np.exp(-self.c * r ** (1.0 + self.eps))

    def profile(self, r):
        return abs(self.h) * np.exp(-self.c * np.asarray(r, dtype=float) ** (1.0 + self.eps))

    @property
    def is_radial(self):
        return True

    @property
    def support_radius(self):
        return math.inf

    @property
    def sup_norm(self):
        return abs(self.h)

    def truncation_radius(self, gamma_max: float = 0.0, rtol: float = 1e-10) -> float:
        """Radius beyond which exp(2*gamma_max*r)|V| carries < rtol of the L^2 mass."""
        if self.c <= 0:
            raise DivergentNormError("ExpProfile needs c > 0")

        def log_w(r):
            return 2.0 * gamma_max * r - self.c * r ** (1.0 + self.eps)

        r = 1.0
        peak = max(log_w(t) for t in np.linspace(0.0, 10.0, 101))
        while log_w(r) > peak + math.log(rtol) - 10.0 or r < 1.0:
            r *= 1.25
            if r > 1e6:
                raise DivergentNormError("weighted profile does not decay")
        return r


@dataclass(frozen=True)
class GridSampled(Potential):
    grid: Optional[SpaceGrid] = None
    values: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        super().__post_init__()
        if self.grid is None or self.values is None:
            raise ValueError("GridSampled needs a grid and values")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise ValueError("one value per grid node required")
        object.__setattr__(self, "values", vals)

    def evaluate(self, x):
        flat = x.reshape(-1, self.dim)
        d = np.linalg.norm(flat[:, None, :] - self.grid.nodes[None], axis=-1)
        j = np.argmin(d, axis=1)
        inside = d[np.arange(len(j)), j] <= self.grid.cell_radius[j]
        return np.where(inside, self.values[j], 0j).reshape(x.shape[:-1])

    @property
    def support_radius(self):
        return float(np.max(np.linalg.norm(self.grid.nodes, axis=-1) + self.grid.cell_radius))

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))


def eval_potential(V: Potential, x) -> complex:
    val = V(x)
    return complex(val) if np.ndim(val) == 0 else val


def dilate(V: Potential, s: float) -> Potential:
    """V_s(x) = s**2 V(s x)."""
    if s <= 0:
        raise ValueError("dilation factor must be positive")
    s2 = s * s
    if isinstance(V, BallIndicator):
        return BallIndicator(dim=V.dim, R=V.R / s, h=s2 * V.h)
    if isinstance(V, RadialTable):
        return RadialTable(dim=V.dim, radii=tuple(r / s for r in V.radii), values=tuple(s2 * v for v in V.values))
    if isinstance(V, SparseSum):
        return SparseSum(
            dim=V.dim,
            terms=tuple((tuple(c_ / s for c_ in c), r / s, s2 * h) for c, r, h in V.terms),
        )
    if isinstance(V, ExpProfile):
        return ExpProfile(dim=V.dim, c=V.c * s ** (1.0 + V.eps), eps=V.eps, h=s2 * V.h)
    raise NotImplementedError(f"dilation not available for {type(V).__name__}")


# ---------------------------------------------------------------------------
# L^p norms


def lp_norm(V: Potential, p: float) -> float:
    """||V||_p (closed form for piecewise-constant variants)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    d = V.dim
    if isinstance(V, (BallIndicator, TubeIndicator)):
        return abs(V.h) * V.measure ** (1.0 / p)
    if isinstance(V, RadialTable):
        r = np.asarray(V.radii)
        shells = unit_ball_volume(d) * np.diff(r**d)
        return float(np.sum(np.abs(V.values) ** p * shells) ** (1.0 / p))
    if isinstance(V, SparseSum):
        vb = unit_ball_volume(d)
        return float(sum(abs(h) ** p * vb * r**d for _, r, h in V.terms) ** (1.0 / p))
    if isinstance(V, ExpProfile):
        if V.c <= 0:
            raise DivergentNormError("exp(-c|x|^(1+eps)) is not integrable for c <= 0")
        s = 1.0 + V.eps
        # int r^{d-1} exp(-a r^s) dr = Gamma(d/s) / (s a^{d/s})
        a = p * V.c
        radial = math.gamma(d / s) / (s * a ** (d / s))
        return abs(V.h) * (d * unit_ball_volume(d) * radial) ** (1.0 / p)
    if isinstance(V, GridSampled):
        return float(np.sum(np.abs(V.values) ** p * V.grid.weights) ** (1.0 / p))
    raise TypeError(f"unsupported potential {type(V).__name__}")


# ---------------------------------------------------------------------------
# Distribution functions mu(alpha) = |{x : e^{2 gamma |x|} |V(x)| > alpha}|


def _ball_cap_outside(c: float, a: float, rho, d: int):
    """|B(c, a) \\ B(0, rho)| with |center| = c, for d in (1, 3)."""
    rho = np.asarray(rho, dtype=float)
    if d == 1:
        lo, hi = c - a, c + a
        inter = np.clip(np.minimum(hi, rho) - np.maximum(lo, -rho), 0.0, None)
        return 2.0 * a - inter
    if d != 3:
        raise NotImplementedError("lens volumes implemented for d = 1, 3")
    full = 4.0 / 3.0 * math.pi * a**3
    rho = np.maximum(rho, 0.0)
    out = np.empty_like(rho)
    for i, R0 in np.ndenumerate(rho):
        if R0 >= c + a:
            inter = full
        elif R0 + a <= c or R0 <= 0:
            inter = 0.0
        elif R0 + c <= a:
            inter = 4.0 / 3.0 * math.pi * R0**3
        elif c == 0:
            inter = 4.0 / 3.0 * math.pi * min(R0, a) ** 3
        else:
            inter = (
                math.pi
                * (R0 + a - c) ** 2
                * (c**2 + 2 * c * a - 3 * a**2 + 2 * c * R0 + 6 * a * R0 - 3 * R0**2)
                / (12.0 * c)
            )
        out[i] = full - inter
    return out


def _tube_outside(R: float, rt: float, rho):
    """|T_R \\ B(0, rho)| in d = 3."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    full = 2.0 * R * math.pi * rt**2
    out = np.empty_like(rho)
    for i, p in np.ndenumerate(rho):
        if p <= 0:
            out[i] = full
            continue
        a = min(R, p)
        if p <= rt:
            inter = math.pi * (2 * a * p**2 - 2 * a**3 / 3.0)
        else:
            b = min(math.sqrt(p**2 - rt**2), a)
            inter = 2 * math.pi * (rt**2 * b + p**2 * (a - b) - (a**3 - b**3) / 3.0)
        out[i] = full - inter
    return out


def _distribution(V: Potential, gamma: float):
    """Return (mu, alpha_max, alpha_breakpoints) for the weighted modulus e^{2 gamma|x|}|V|."""
    d = V.dim
    vb = unit_ball_volume(d)
    g2 = 2.0 * gamma
    if isinstance(V, BallIndicator):
        h, R = abs(V.h), V.R
        # a weight this flat changes the norm by less than rounding
        if g2 * R < 1e-14:
            return (lambda a: np.where(a < h, vb * R**d, 0.0)), h, [h]

        def mu(a):
            a = np.asarray(a, dtype=float)
            r_a = np.clip(np.log(np.maximum(a, 1e-300) / h) / g2, 0.0, None)
            return np.where(a < h * math.exp(g2 * R), vb * (R**d - np.minimum(r_a, R) ** d), 0.0)

        return mu, h * math.exp(g2 * R), [h]
    if isinstance(V, TubeIndicator):
        h = abs(V.h)
        amax = h * math.exp(g2 * V.support_radius)
        if gamma == 0:
            return (lambda a: np.where(a < h, V.measure, 0.0)), h, [h]

        def mu(a):
            a = np.atleast_1d(np.asarray(a, dtype=float))
            rho = np.log(np.maximum(a, 1e-300) / h) / g2
            return np.where(a < amax, _tube_outside(V.R, V.transverse_radius, rho), 0.0)

        return mu, amax, [h, h * math.exp(g2 * V.R), h * math.exp(g2 * V.transverse_radius)]
    if isinstance(V, RadialTable):
        r = np.asarray(V.radii)
        hs = np.abs(np.asarray(V.values))

        def mu(a):
            a = np.atleast_1d(np.asarray(a, dtype=float))
            out = np.zeros_like(a)
            for lo, hi, h in zip(r[:-1], r[1:], hs):
                if h == 0:
                    continue
                if gamma == 0:
                    out += np.where(a < h, vb * (hi**d - lo**d), 0.0)
                else:
                    r_a = np.clip(np.log(np.maximum(a, 1e-300) / h) / g2, lo, hi)
                    out += np.where(a < h * math.exp(g2 * hi), vb * (hi**d - r_a**d), 0.0)
            return out

        amax = float(np.max(hs * np.exp(g2 * r[1:])))
        bps = list(hs) + list(hs * np.exp(g2 * r[1:])) + list(hs * np.exp(g2 * r[:-1]))
        return mu, amax, bps
    if isinstance(V, SparseSum):
        terms = [(np.linalg.norm(c), rad, abs(h)) for c, rad, h in V.terms]

        def mu(a):
            a = np.atleast_1d(np.asarray(a, dtype=float))
            out = np.zeros_like(a)
            for cn, rad, h in terms:
                if gamma == 0:
                    out += np.where(a < h, vb * rad**d, 0.0)
                else:
                    rho = np.log(np.maximum(a, 1e-300) / h) / g2
                    out += np.where(a < h * math.exp(g2 * (cn + rad)), _ball_cap_outside(cn, rad, rho, d), 0.0)
            return out

        amax = max(h * math.exp(g2 * (cn + rad)) for cn, rad, h in terms)
        bps = [h for _, _, h in terms] + [h * math.exp(g2 * max(cn - rad, 0.0)) for cn, rad, h in terms]
        bps += [h * math.exp(g2 * (cn + rad)) for cn, rad, h in terms]
        return mu, amax, bps
    if isinstance(V, ExpProfile):
        if V.c <= 0:
            raise DivergentNormError("ExpProfile with c <= 0 has divergent distribution function")
        h, c, s = abs(V.h), V.c, 1.0 + V.eps

        def logf(r):
            return g2 * r - c * r**s

        if gamma > 0 and V.eps == 0 and g2 >= c:
            raise DivergentNormError("exponential weight beats the decay")
        r_star = 0.0
        if gamma > 0:
            r_star = (g2 / (c * s)) ** (1.0 / (s - 1.0)) if s > 1 else 0.0
        fmax = h * math.exp(logf(r_star))

        def interval(a):
            if a <= 0:
                return 0.0, math.inf
            if a >= fmax:
                return 0.0, 0.0
            target = math.log(a / h)
            lo = 0.0
            if logf(0.0) <= target and r_star > 0:
                lo = optimize.brentq(lambda r: logf(r) - target, 0.0, r_star)
            hi_b = max(r_star, 1.0)
            while logf(hi_b) > target:
                hi_b *= 2.0
            hi = optimize.brentq(lambda r: logf(r) - target, r_star, hi_b)
            return lo, hi

        def mu(a):
            a = np.atleast_1d(np.asarray(a, dtype=float))
            out = np.empty_like(a)
            for i, ai in np.ndenumerate(a):
                lo, hi = interval(ai)
                out[i] = vb * (hi**d - lo**d)
            return out

        return mu, fmax, [h]
    if isinstance(V, GridSampled):
        w = V.grid.weights
        f = np.exp(g2 * np.linalg.norm(V.grid.nodes, axis=-1)) * np.abs(V.values)
        order = np.argsort(f)[::-1]
        fs, cw = f[order], np.cumsum(w[order])

        def mu(a):
            a = np.atleast_1d(np.asarray(a, dtype=float))
            k = np.searchsorted(-fs, -a, side="left")
            return np.where(k > 0, cw[np.maximum(k - 1, 0)], 0.0)

        return mu, float(fs[0]), list(np.unique(fs))
    raise TypeError(f"unsupported potential {type(V).__name__}")


def lorentz_quasinorm(V: Potential, p: float, q: float, gamma: float = 0.0) -> float:
    """||e^{2 gamma|.|} V||_{p,q} = p^{1/q} (int_0^inf alpha^q mu(alpha)^{q/p} dalpha/alpha)^{1/q}.

    The layer-cake integral is taken in t = log(alpha_max/alpha) with the jump
    points of mu as panel breaks.
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    mu, amax, bps = _distribution(V, gamma)
    if amax <= 0:
        return 0.0

    def integrand(t):
        m = float(np.atleast_1d(mu(amax * math.exp(-t)))[0])
        return math.exp(-q * t) * m ** (q / p)

    # exp(-q t) is below 1e-300 past t_end; mu grows at most polylogarithmically
    t_end = 700.0 / min(q, 1.0)
    ts = sorted({0.0} | {math.log(amax / b) for b in bps if 0 < b < amax})
    total = 0.0
    for a, b in zip(ts, ts[1:] + [t_end]):
        val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    if not math.isfinite(total):
        raise DivergentNormError("layer-cake integral diverges")
    return p ** (1.0 / q) * (amax**q * total) ** (1.0 / q)


# ---------------------------------------------------------------------------
# weighted sup norms


@dataclass(frozen=True)
class PotentialNorms:
    v0: float
    v_gamma: float
    v_rhoR: float
    v_rhoRgamma: float
    sup_norm: float
    gamma: float
    rho: float
    R: float


def _radial_sup(profile: Callable, rho: float, R: float, gamma: float, edges: Sequence[float]) -> float:
    """sup_r e^{2 gamma r}(1 + r/R)^rho profile(r) for profiles constant between edges."""
    best = 0.0
    for e in edges:
        best = max(best, math.exp(2 * gamma * e) * (1 + e / R) ** rho * float(profile(e)))
    return best


def weighted_sup_norms(V: Potential, rho: float, R: float, gamma: float = 0.0) -> PotentialNorms:
    if rho <= 0 or R <= 0:
        raise ValueError("rho and R must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")

    def weighted(gm: float) -> float:
        if isinstance(V, BallIndicator):
            return math.exp(2 * gm * V.R) * (1 + V.R / R) ** rho * abs(V.h)
        if isinstance(V, TubeIndicator):
            m = V.support_radius
            return math.exp(2 * gm * m) * (1 + m / R) ** rho * abs(V.h)
        if isinstance(V, RadialTable):
            return max(
                math.exp(2 * gm * hi) * (1 + hi / R) ** rho * abs(v) for hi, v in zip(V.radii[1:], V.values)
            )
        if isinstance(V, SparseSum):
            return max(
                (
                    math.exp(2 * gm * (np.linalg.norm(c) + r)) * (1 + (np.linalg.norm(c) + r) / R) ** rho * abs(h)
                    for c, r, h in V.terms
                ),
                default=0.0,
            )
        if isinstance(V, ExpProfile):
            s = 1.0 + V.eps
            if V.c <= 0 or (V.eps == 0 and 2 * gm >= V.c):
                raise DivergentNormError("weighted sup is infinite")

            # log of the weighted profile is concave in r: golden-section on it
            def neg_log(r):
                return -(2 * gm * r + rho * math.log1p(r / R) - V.c * r**s)

            hi = 1.0
            while neg_log(hi) < neg_log(hi / 2):
                hi *= 2
            res = optimize.minimize_scalar(neg_log, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12})
            val = max(-res.fun, -neg_log(0.0))
            return abs(V.h) * math.exp(val)
        if isinstance(V, GridSampled):
            r = np.linalg.norm(V.grid.nodes, axis=-1)
            return float(np.max(np.exp(2 * gm * r) * (1 + r / R) ** rho * np.abs(V.values)))
        raise TypeError(f"unsupported potential {type(V).__name__}")

    p = (V.dim + 1) / 2.0
    return PotentialNorms(
        v0=lp_norm(V, p),
        v_gamma=lorentz_quasinorm(V, p, 1.0, gamma),
        v_rhoR=weighted(0.0),
        v_rhoRgamma=weighted(gamma),
        sup_norm=V.sup_norm,
        gamma=gamma,
        rho=rho,
        R=R,
    )


# ---------------------------------------------------------------------------
# structured-text round trip


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _z(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def to_dict(V: Potential) -> dict:
    base = {"variant": type(V).__name__, "dim": V.dim}
    if isinstance(V, (BallIndicator, TubeIndicator)):
        base.update(R=V.R, h=_c(V.h))
    elif isinstance(V, RadialTable):
        base.update(radii=list(V.radii), values=[_c(v) for v in V.values])
    elif isinstance(V, SparseSum):
        base.update(terms=[{"center": list(c), "radius": r, "height": _c(h)} for c, r, h in V.terms])
    elif isinstance(V, ExpProfile):
        base.update(c=V.c, eps=V.eps, h=_c(V.h))
    elif isinstance(V, GridSampled):
        g = V.grid
        base.update(
            grid={
                "nodes": g.nodes.tolist(),
                "weights": g.weights.tolist(),
                "cell_radius": g.cell_radius.tolist(),
            },
            values=[_c(v) for v in V.values],
        )
    else:
        raise TypeError(f"unsupported potential {type(V).__name__}")
    return base


def from_dict(data: dict) -> Potential:
    kind = data["variant"]
    dim = int(data.get("dim", 3))
    if kind == "BallIndicator":
        return BallIndicator(dim=dim, R=float(data["R"]), h=_z(data["h"]))
    if kind == "TubeIndicator":
        return TubeIndicator(dim=dim, R=float(data["R"]), h=_z(data["h"]))
    if kind == "RadialTable":
        return RadialTable(dim=dim, radii=tuple(data["radii"]), values=tuple(_z(v) for v in data["values"]))
    if kind == "SparseSum":
        return SparseSum(
            dim=dim,
            terms=tuple((tuple(t["center"]), float(t["radius"]), _z(t["height"])) for t in data["terms"]),
        )
    if kind == "ExpProfile":
        return ExpProfile(dim=dim, c=float(data["c"]), eps=float(data["eps"]), h=_z(data.get("h", 1.0)))
    if kind == "GridSampled":
        g = data["grid"]
        grid = SpaceGrid(
            nodes=np.asarray(g["nodes"], dtype=float),
            weights=np.asarray(g["weights"], dtype=float),
            cell_radius=np.asarray(g["cell_radius"], dtype=float),
        )
        return GridSampled(dim=dim, grid=grid, values=np.array([_z(v) for v in data["values"]]))
    raise ValueError(f"unknown potential variant {kind!r}")


def dumps(V: Potential) -> str:
    return json.dumps(to_dict(V), sort_keys=True)


def loads(text: str) -> Potential:
    return from_dict(json.loads(text))
