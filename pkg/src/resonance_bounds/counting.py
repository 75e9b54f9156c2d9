"""Argument-principle zero counting, zero location and the regularized counting function.

Everything here works on *evaluators*: callables lam -> DetSample.  A sample may
carry ``component_logs``, the logarithms of analytic factors whose product is the
function being counted (for H_alpha: one factor per root of unity and symmetry
block).  Phases are unwrapped per factor, which keeps the phase velocity low, and
the total winding is the sum over factors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .determinant import DetSample, eval_det, wrap_phase
from .birman_schwinger import assemble_bs

JUMP = math.pi / 2
SPLIT = 0.5 + 1 / 73


class ZeroNearContour(ArithmeticError):
    """A zero sits on or too close to the contour for a certified count."""

    def __init__(self, msg: str, lam: complex = 0j):
        super().__init__(msg)
        self.lam = lam


class BudgetExhausted(RuntimeError):
    def __init__(self, msg: str, unresolved=()):
        super().__init__(msg)
        self.unresolved = list(unresolved)


def analytic_sample(f: Callable, lam: complex) -> DetSample:
    """Wrap f(lam) (a scalar or an array of factors) as a DetSample."""
    v = np.atleast_1d(np.asarray(f(lam), dtype=complex))
    if np.any(v == 0):
        raise ZeroNearContour(f"exact zero at {lam}", lam)
    logs = np.log(v)
    return DetSample(
        complex(lam),
        float(np.sum(logs.real)),
        float(wrap_phase(np.sum(logs.imag))),
        0,
        0.0,
        logs,
        min_factor=float(np.min(np.abs(v))),
    )


class Evaluator:
    """Memoizing lam -> DetSample wrapper with an optional near-zero guard."""

    def __init__(self, func: Callable, analytic: bool = False, min_factor: float = 0.0, tail_guard: bool = True):
        self._func = func
        self._analytic = analytic
        self.min_factor = min_factor
        self.tail_guard = tail_guard
        self.cache: dict = {}

    def __call__(self, lam: complex) -> DetSample:
        lam = complex(lam)
        s = self.cache.get(lam)
        if s is None:
            s = analytic_sample(self._func, lam) if self._analytic else self._func(lam)
            self.cache[lam] = s
        return s

    def too_close(self, s: DetSample) -> bool:
        if s.min_factor < self.min_factor:
            return True
        if self.tail_guard and 0 < s.tail_estimate < math.inf:
            return s.log_modulus < math.log(10.0 * s.tail_estimate)
        return False

    @property
    def evaluations(self) -> int:
        return len(self.cache)


def determinant_evaluator(V, grid, alpha: int = 4, branch: str = "principal", min_factor: float = 0.0, tail_guard: bool = False) -> Evaluator:
    low = alpha < 4

    def f(lam):
        return eval_det(assemble_bs(V, grid, lam, branch=branch), alpha, allow_low_power=low)

    return Evaluator(f, min_factor=min_factor, tail_guard=tail_guard)


def _logs(s: DetSample) -> np.ndarray:
    if s.component_logs is not None:
        return np.asarray(s.component_logs)
    return np.array([s.log_modulus + 1j * s.phase])


def _phase_steps(a: DetSample, b: DetSample) -> np.ndarray:
    return wrap_phase(_logs(b).imag - _logs(a).imag)


def winding_count(samples: Sequence[DetSample]) -> int:
    """Total winding of an ordered closed loop of samples (first and last at the same lam)."""
    if len(samples) < 2 or samples[0].lam != samples[-1].lam:
        raise ValueError("samples must form a closed loop (first lam == last lam)")
    total = np.zeros(len(_logs(samples[0])))
    for a, b in zip(samples[:-1], samples[1:]):
        d = _phase_steps(a, b)
        if np.max(np.abs(d)) > JUMP:
            raise ValueError(f"phase jump {np.max(np.abs(d)):.3f} > pi/2 near {b.lam}: refine the contour")
        total += d
    return int(round(float(np.sum(total)) / (2 * math.pi)))


# ---------------------------------------------------------------------------
# closed paths parameterized by t in [0, 1)


def circle_path(center: complex, radius: float) -> Callable:
    return lambda t: center + radius * np.exp(2j * np.pi * t)


def rectangle_path(x0: float, x1: float, y0: float, y1: float) -> Callable:
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]

    def path(t):
        t = t % 1.0
        side = min(int(t * 4), 3)
        u = t * 4 - side
        a, b = corners[side], corners[(side + 1) % 4]
        return a + u * (b - a)

    return path


@dataclass
class WindingResult:
    per_component: np.ndarray
    samples: list
    ts: list

    @property
    def total(self) -> int:
        return int(np.sum(self.per_component))


def adaptive_winding(
    ev: Evaluator,
    path: Callable,
    n_nodes: int = 64,
    max_nodes: int = 200000,
    min_dt: float = 1e-12,
) -> WindingResult:
    """Winding along a closed path, bisecting any step whose phase jump exceeds pi/2."""
    if n_nodes < 4:
        raise ValueError("need at least 4 initial nodes")
    ts = [k / n_nodes for k in range(n_nodes)] + [1.0]
    samples = []
    for t in ts:
        lam = complex(path(t)) if t < 1.0 else complex(path(0.0))
        s = ev(lam)
        if ev.too_close(s):
            raise ZeroNearContour(f"determinant nearly vanishes on the contour at {lam}", lam)
        samples.append(s)
    i = 0
    while i < len(ts) - 1:
        d = _phase_steps(samples[i], samples[i + 1])
        if np.max(np.abs(d)) > JUMP:
            if ts[i + 1] - ts[i] < min_dt or len(ts) > max_nodes:
                raise ZeroNearContour(f"phase refinement stalled near {samples[i].lam}", samples[i].lam)
            tm = 0.5 * (ts[i] + ts[i + 1])
            s = ev(complex(path(tm)))
            if ev.too_close(s):
                raise ZeroNearContour(f"determinant nearly vanishes on the contour at {s.lam}", s.lam)
            ts.insert(i + 1, tm)
            samples.insert(i + 1, s)
            continue
        i += 1
    steps = np.array([_phase_steps(a, b) for a, b in zip(samples[:-1], samples[1:])])
    per = np.rint(steps.sum(axis=0) / (2 * math.pi)).astype(int)
    return WindingResult(per, samples, ts)


# ---------------------------------------------------------------------------
# zero location


@dataclass(frozen=True)
class Zero:
    location: complex
    multiplicity: int
    component: int = -1
    converged: bool = True


def _log_diff(ev: Evaluator, lam: complex, h: complex, comp: int) -> complex:
    a = _logs(ev(lam - h))[comp]
    b = _logs(ev(lam + h))[comp]
    return complex((b.real - a.real) + 1j * float(wrap_phase(b.imag - a.imag))) / (2 * h)


def newton_polish(
    ev: Evaluator,
    lam: complex,
    comp: int,
    mult: int = 1,
    scale: float = 1.0,
    maxiter: int = 30,
    tol: float = 1e-11,
    leash: float = math.inf,
) -> tuple:
    """Modified Newton lam <- lam - m / (log f)' with central differences.

    Returns (lam, converged); gives up once the iterate strays ``leash`` from the start.
    """
    start = lam
    h = 1e-4 * scale
    prev = math.inf
    for _ in range(maxiter):
        d = _log_diff(ev, lam, h, comp)
        if d == 0 or not np.isfinite(d):
            return lam, False
        step = mult / d
        lam = lam - step
        if abs(lam - start) > leash:
            return lam, False
        size = abs(step)
        # converged, or stalled at the finite-difference noise floor
        if size < tol * max(1.0, abs(lam)) or (size < 1e-7 * scale and size > 0.5 * prev):
            return lam, True
        prev = size
        h = max(min(1e-3 * size, 1e-4 * scale), 1e-14 * max(1.0, abs(lam)))
    return lam, False


def locate_zeros(
    ev: Evaluator,
    region: tuple,
    min_size: float = 1e-6,
    max_boxes: int = 20000,
    n_side: int = 8,
    merge_tol: float = 1e-8,
) -> list:
    """Zeros (with multiplicity) in the rectangle (x0, x1, y0, y1).

    For every factor winding around a box, modified Newton on that factor's
    logarithm (multiplicity = its winding) is started at the box center.  A box is
    settled when each run converges inside it (multiple zeros are confirmed by a
    ``min_size`` circle); otherwise it is quartered.  Boxes below ``min_size`` are
    reported at their centers with their winding as multiplicity.
    """
    x0, x1, y0, y1 = map(float, region)
    scale = max(x1 - x0, y1 - y0)
    queue = [(x0, x1, y0, y1)]
    found: list = []
    unresolved = []
    boxes = 0
    while queue:
        bx = queue.pop()
        boxes += 1
        if boxes > max_boxes:
            unresolved.extend([bx] + queue)
            raise BudgetExhausted("box budget exhausted", unresolved)
        a0, a1, b0, b1 = bx
        try:
            w = adaptive_winding(ev, rectangle_path(*bx), n_nodes=4 * n_side).per_component
        except ZeroNearContour:
            # nudge the box outward a little; its neighbours are handled independently
            pad = 0.013 * max(a1 - a0, b1 - b0)
            queue.append((a0 - pad, a1 + pad, b0 - pad, b1 + pad))
            continue
        if np.any(w < 0):
            raise RuntimeError(f"negative winding {w.min()} on box {bx}: the function has poles there")
        if w.sum() == 0:
            continue
        size = max(a1 - a0, b1 - b0)
        center = complex(0.5 * (a0 + a1), 0.5 * (b0 + b1))
        local = []
        ok = True
        for c in np.nonzero(w)[0]:
            z, conv = newton_polish(ev, center, int(c), int(w[c]), scale=size, leash=size)
            inside = a0 - 1e-9 * scale <= z.real <= a1 + 1e-9 * scale and b0 - 1e-9 * scale <= z.imag <= b1 + 1e-9 * scale
            if conv and inside and w[c] > 1:
                # a multiple zero is accepted only if a min_size circle holds all of it
                conv = _winds(ev, z, min_size, int(c)) == w[c]
            if conv and inside:
                local.append(Zero(z, int(w[c]), int(c)))
            elif size < min_size:
                local.append(Zero(center, int(w[c]), int(c), converged=False))
            else:
                ok = False
                break
        if ok:
            found.extend(local)
            continue
        # off-centre split: zeros on symmetry axes (Re lam = 0 for real potentials) stay off edges
        xm, ym = a0 + SPLIT * (a1 - a0), b0 + SPLIT * (b1 - b0)
        queue.extend([(a0, xm, b0, ym), (xm, a1, b0, ym), (a0, xm, ym, b1), (xm, a1, ym, b1)])
    return _dedupe(found, merge_tol * scale)


def _winds(ev: Evaluator, z: complex, rho: float, comp: int) -> int:
    try:
        return int(adaptive_winding(ev, circle_path(z, rho), n_nodes=16).per_component[comp])
    except ZeroNearContour:
        return -1


def _dedupe(zeros: list, tol: float) -> list:
    # overlapping (padded) boxes can report one zero twice
    out: list = []
    for z in zeros:
        if any(o.component == z.component and abs(o.location - z.location) < max(tol, 1e-10) for o in out):
            continue
        out.append(z)
    return out


def merge_zeros(zeros: Sequence[Zero], tol: float = 1e-8) -> list:
    """Combine zeros of different factors at the same point into (location, multiplicity)."""
    out: list = []
    for z in sorted(zeros, key=lambda z: (round(z.location.real, 6), z.location.imag)):
        for i, (loc, m) in enumerate(out):
            if abs(loc - z.location) < tol:
                out[i] = (loc, m + z.multiplicity)
                break
        else:
            out.append((z.location, z.multiplicity))
    return out


# ---------------------------------------------------------------------------
# counting functions


def _moduli(zeros) -> tuple:
    locs, mults = [], []
    for z in zeros:
        if isinstance(z, Zero):
            locs.append(z.location)
            mults.append(z.multiplicity)
        elif isinstance(z, tuple):
            locs.append(complex(z[0]))
            mults.append(int(z[1]))
        else:
            locs.append(complex(z))
            mults.append(1)
    return np.abs(np.array(locs, dtype=complex)), np.array(mults, dtype=int)


def counting_function(zeros, t: float) -> int:
    r, m = _moduli(zeros)
    return int(np.sum(m[r <= t]))


def regularized_count(zeros, r: float) -> float:
    """N(r) = sum_{|lam_j| <= r} m_j ln(r / |lam_j|)."""
    mod, m = _moduli(zeros)
    if np.any(mod == 0):
        raise ValueError("a zero at the origin makes the regularized count diverge")
    sel = mod <= r
    return float(np.sum(m[sel] * np.log(r / mod[sel])))


def regularized_count_quadrature(zeros, r: float) -> float:
    """int_0^r n(t)/t dt by adaptive quadrature between the jump points of n."""
    mod, m = _moduli(zeros)
    if np.any(mod == 0):
        raise ValueError("a zero at the origin makes the regularized count diverge")
    pts = np.sort(mod[mod <= r])
    if pts.size == 0:
        return 0.0
    edges = np.concatenate([pts, [r]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            n_ab = counting_function(zeros, 0.5 * (a + b))
            val, _ = integrate.quad(lambda t: n_ab / t, a, b, epsabs=0.0, epsrel=1e-13)
            total += val
    return total


def jensen_mean(f: Callable, r: float, center: complex = 0j, nodes: int = 4096) -> float:
    """Trapezoid mean of ln|f| on the circle |lam - center| = r."""
    th = 2 * np.pi * np.arange(nodes) / nodes
    vals = np.array([f(center + r * np.exp(1j * t)) for t in th], dtype=complex)
    return float(np.mean(np.log(np.abs(vals))))


def jensen_residual(f: Callable, r: float, zeros, center: complex = 0j, nodes: int = 4096) -> float:
    """|mean ln|f| on the circle - ln|f(center)| - sum ln(r / |z_j - center|)|."""
    shifted = [(complex(z[0]) - center, z[1]) if isinstance(z, tuple) else complex(z) - center for z in zeros]
    lhs = jensen_mean(f, r, center, nodes) - math.log(abs(f(center)))
    return abs(lhs - regularized_count(shifted, r))


# ---------------------------------------------------------------------------
# shifted-disk geometry


@dataclass(frozen=True)
class ShiftedDisk:
    """D(lambda0, |lambda0| + r) with lambda0 = i (A/2) v0^{(d+1)/2}."""

    lambda0: complex
    r: float
    A: Optional[float] = None

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.lambda0.real != 0 or self.lambda0.imag <= 0:
            raise ValueError("lambda0 must lie on the positive imaginary axis")

    @classmethod
    def from_norms(cls, A: float, v0: float, r: float, d: int = 3) -> "ShiftedDisk":
        return cls(complex(0.0, 0.5 * A * v0 ** ((d + 1) / 2)), r, A)

    @property
    def radius(self) -> float:
        return abs(self.lambda0) + self.r


def shifted_disk_geometry(disk: ShiftedDisk) -> tuple:
    """(min Im over the disk, max |lam| on its part in the lower half-plane, min |lam| on its boundary)."""
    l0 = abs(disk.lambda0)
    return -disk.r, math.sqrt(2 * l0 * disk.r + disk.r**2), disk.r


def shifted_disk_admissible(disk: ShiftedDisk, gamma: float, delta: float, eps: float) -> bool:
    _, max_abs, _ = shifted_disk_geometry(disk)
    return math.sqrt(1 + delta) * disk.r + eps * max_abs <= gamma


# ---------------------------------------------------------------------------
# disk counts


@dataclass
class CountConfig:
    alpha: int = 4
    branch: str = "principal"
    n_nodes: int = 128
    perturb: float = 0.01
    min_factor: float = 1e-2
    locate: bool = False
    min_size: float = 1e-6


@dataclass
class CountReport:
    r: float
    n: int
    N: Optional[float]
    zeros: list = field(default_factory=list)
    oracle_n: Optional[int] = None
    bound_values: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    n_plus: Optional[int] = None
    radius_used: Optional[float] = None
    jensen_N: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "schema": "count-report/1",
            "r": self.r,
            "radius_used": self.radius_used,
            "n": self.n,
            "N": self.N,
            "jensen_N": self.jensen_N,
            "n_plus": self.n_plus,
            "zeros": [{"re": z.real, "im": z.imag, "mult": m} for z, m in self.zeros],
            "oracle": self.oracle_n,
            "bounds": self.bound_values,
            "verdicts": self.verdicts,
            "meta": self.meta,
        }
        return json.dumps(doc, sort_keys=True)


def _jensen_from_samples(ev: Evaluator, wr: WindingResult) -> float:
    ts = np.array(wr.ts)
    logs = np.array([s.log_modulus for s in wr.samples])
    mean = float(np.sum(0.5 * (logs[1:] + logs[:-1]) * np.diff(ts)))
    return mean - ev(0j).log_modulus


def count_evaluator(ev: Evaluator, r: float, config: CountConfig = CountConfig()) -> CountReport:
    """Count zeros of the evaluated function in |lam| <= r, perturbing r by +-perturb on contact."""
    last = None
    for radius in (r, r * (1 - config.perturb), r * (1 + config.perturb)):
        try:
            wr = adaptive_winding(ev, circle_path(0j, radius), n_nodes=config.n_nodes)
            break
        except ZeroNearContour as exc:
            last = exc
    else:
        raise last
    report = CountReport(r=r, n=wr.total, N=None, radius_used=radius)
    report.meta["evaluations"] = ev.evaluations
    report.meta["contour_nodes"] = len(wr.ts) - 1
    report.meta["per_component"] = wr.per_component.tolist()
    try:
        report.jensen_N = _jensen_from_samples(ev, wr)
    except (ZeroNearContour, ValueError):
        report.jensen_N = None
    if config.locate:
        zs = locate_zeros(ev, (-radius, radius, -radius, radius), min_size=config.min_size)
        merged = [(z, m) for z, m in merge_zeros(zs) if abs(z) <= radius]
        report.zeros = merged
        report.N = regularized_count(merged, radius)
        report.n_plus = sum(m for z, m in merged if z.imag >= 0)
    return report


def count_in_disk(V, grid, r: float, config: CountConfig = CountConfig()) -> CountReport:
    """Determinant zeros of H_alpha in |lam| <= r (with the configured branch)."""
    if V is None or (hasattr(V, "sup_norm") and V.sup_norm == 0):
        return CountReport(r=r, n=0, N=0.0, radius_used=r, n_plus=0, jensen_N=0.0)
    ev = determinant_evaluator(V, grid, config.alpha, config.branch, config.min_factor)
    report = count_evaluator(ev, r, config)
    report.meta.update(alpha=config.alpha, branch=config.branch, grid_size=grid.size, kind="determinant zeros")
    return report
