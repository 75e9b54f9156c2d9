"""Constant-free right-hand sides and hypotheses of the resonance counting bounds.

Every evaluator returns the bound without its implicit constant.  Verdicts
compare computed counts against C * RHS with one calibrated C per bound.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .determinant import InadmissibleParameters, c_delta
from .potentials import PotentialNorms


def bracket(x: float) -> float:
    """<x> = 2 + |x|."""
    return 2.0 + abs(x)


def beta_floor(d: int = 3) -> float:
    """Lower bound 2(e^{(d+1)/2} - 1)/(e - 1) on the endpoint constant beta_d."""
    return 2.0 * (math.exp((d + 1) / 2) - 1.0) / (math.e - 1.0)


@dataclass(frozen=True)
class BoundParams:
    r: float = 1.0
    gamma: float = 2.0
    delta: float = 1.0
    eps: float = 1.0
    theta: float = 1.0
    nu: float = 1.0
    kappa: float = 0.5
    alpha: float = 5.0
    A: float = 1.0
    R: float = 1.0
    rho: float = 3.0
    d: int = 3

    def with_(self, **kw) -> "BoundParams":
        return replace(self, **kw)


def _common_violations(p: BoundParams) -> list:
    out = []
    if p.d < 3 or p.d % 2 == 0:
        out.append(f"d = {p.d}: d >= 3 odd")
    if not 0 < p.delta <= 1:
        out.append(f"delta = {p.delta}: delta in (0,1]")
    if not 0 < p.eps <= 1:
        out.append(f"eps = {p.eps}: eps in (0,1]")
    if p.r <= 0:
        out.append(f"r = {p.r}: r > 0")
    if p.gamma <= 0:
        out.append(f"gamma = {p.gamma}: gamma > 0")
    return out


def _alpha_violation(p: BoundParams) -> list:
    need = max((p.d - 1) / p.nu, p.d / (2 * p.theta)) if p.nu > 0 and p.theta > 0 else math.inf
    return [] if p.alpha > need else [f"alpha = {p.alpha}: alpha > max((d-1)/nu, d/(2 theta)) = {need:.6g}"]


def admissibility_margin(p: BoundParams, scale: float) -> float:
    """gamma - [(1+delta)^{1/2} r + eps (A scale r + r^2)^{1/2}]; ``scale`` is v0^{(d+1)/2}, ||V||_inf^{1/2} or v_{rho,R}^{1/2}."""
    return p.gamma - (math.sqrt(1 + p.delta) * p.r + p.eps * math.sqrt(p.A * scale * p.r + p.r**2))


@dataclass
class BoundResult:
    rhs: float
    admissible: bool
    violated: list = field(default_factory=list)
    terms: dict = field(default_factory=dict)

    @property
    def violation_text(self) -> Optional[str]:
        return "; ".join(self.violated) if self.violated else None


def _admit(p: BoundParams, scale: float, violations: list) -> list:
    margin = admissibility_margin(p, scale)
    if margin < -1e-12 * max(1.0, p.gamma):
        lhs = p.gamma - margin
        violations.append(f"(1+delta)^(1/2) r + eps (A s r + r^2)^(1/2) = {lhs:.6g} > gamma = {p.gamma:.6g}")
    return violations


def thm_Lp_rhs(p: BoundParams, norms: PotentialNorms) -> BoundResult:
    """r^-2 v0^{d+1} + A^-2 + eps^{1-d} [ln(2 + r^-2 (c_delta v_gamma)^{d+1})]^d."""
    d = p.d
    viol = _common_violations(p)
    if p.A <= 0:
        viol.append(f"A = {p.A}: A > 0")
    if abs(norms.gamma - p.gamma) > 1e-12 * max(1.0, p.gamma):
        viol.append(f"norms computed at gamma = {norms.gamma}, bound evaluated at gamma = {p.gamma}")
    if viol:
        return BoundResult(math.nan, False, viol)
    cd = c_delta(p.delta, d)
    t1 = p.r**-2 * norms.v0 ** (d + 1)
    t2 = p.A**-2
    t3 = p.eps ** (1 - d) * math.log(2 + p.r**-2 * (cd * norms.v_gamma) ** (d + 1)) ** d
    viol = _admit(p, norms.v0 ** ((d + 1) / 2), viol)
    return BoundResult(t1 + t2 + t3, not viol, viol, {"v0 term": t1, "A term": t2, "log term": t3})


def corollary_A(r: float, v0: float, d: int = 3) -> float:
    """A = r v0^{-(d+1)/2}, which turns A^-2 into r^-2 v0^{d+1}."""
    return r * v0 ** (-(d + 1) / 2)


@dataclass
class HalfPlaneResult:
    rhs: float
    endpoint_rhs: float
    boundary: float
    endpoint_boundary: float
    beta_d: float


def thm_halfplane_rhs(p: BoundParams, norms: PotentialNorms, beta_d: Optional[float] = None) -> HalfPlaneResult:
    """(gamma eps)^-1 (c_delta v_gamma)^{d+1} on Im lam >= -gamma/sqrt(1+delta) + eps, with the endpoint form."""
    d = p.d
    if p.gamma <= 0:
        raise InadmissibleParameters("gamma > 0 required")
    top = p.gamma / math.sqrt(1 + p.delta)
    if not 0 < p.eps <= top * (1 + 1e-12):
        raise InadmissibleParameters(f"eps = {p.eps}: eps in (0, gamma/sqrt(1+delta)] = (0, {top:.6g}]")
    beta = beta_floor(d) if beta_d is None else beta_d
    if beta < beta_floor(d):
        raise InadmissibleParameters(f"beta_d = {beta} below its floor {beta_floor(d):.6g}")
    rhs = (p.gamma * p.eps) ** -1 * (c_delta(p.delta, d) * norms.v_gamma) ** (d + 1)
    endpoint = (p.gamma * p.eps) ** -1 * norms.v0 ** (d + 1)
    return HalfPlaneResult(rhs, endpoint, -top + p.eps, -p.gamma / beta + p.eps, beta)


@dataclass
class EigenvalueResult:
    rhs: float
    small_gamma: bool
    terms: dict = field(default_factory=dict)


def thm_eigenvalue_rhs(gamma: float, norms: PotentialNorms, d: int = 3) -> EigenvalueResult:
    """gamma^-2 v0^{d+1} + gamma^{1-d} v0^{(d^2-1)/2} [ln(2 + gamma^-2 v_gamma^{d+1})]^d.

    The hypothesis gamma << v0^{(d+1)/2} is read as gamma <= v0^{(d+1)/2} / 10.
    """
    if gamma <= 0:
        raise InadmissibleParameters("gamma > 0 required")
    t1 = gamma**-2 * norms.v0 ** (d + 1)
    t2 = gamma ** (1 - d) * norms.v0 ** ((d * d - 1) / 2) * math.log(2 + gamma**-2 * norms.v_gamma ** (d + 1)) ** d
    return EigenvalueResult(t1 + t2, gamma <= norms.v0 ** ((d + 1) / 2) / 10.0, {"v0 term": t1, "log term": t2})


@dataclass
class TermsResult:
    I: float
    II: float
    III: float
    admissible: bool
    violated: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.I + self.II + self.III


def thm_compact_terms(p: BoundParams, sup_norm: float, R: Optional[float] = None) -> TermsResult:
    """Terms I, II, III for potentials supported in B(0, R) with ||V||_inf = sup_norm."""
    d = p.d
    R = p.R if R is None else R
    viol = _common_violations(p)
    if not 0 < p.theta <= 1:
        viol.append(f"theta = {p.theta}: theta in (0,1]")
    if p.nu <= 0:
        viol.append(f"nu = {p.nu}: nu > 0")
    viol += _alpha_violation(p)
    if viol:
        return TermsResult(math.nan, math.nan, math.nan, False, viol)
    rR = p.r * R
    b = bracket(rR)
    I = (b**p.nu * math.log(b) * R / p.r * sup_norm) ** ((d - 1) / p.nu) + rR**d * (sup_norm**0.5 / p.r) ** (d / p.theta)
    II = rR**d * p.A ** (-d / p.theta)
    if sup_norm > 0:
        log_inner = (1 - d) * math.log(p.delta) + math.log(R / p.r) + 2 * p.gamma * R + math.log(sup_norm)
    else:
        log_inner = -math.inf
    III = p.eps ** (1 - d) * _log2_power(log_inner, p.alpha) ** d
    viol = _admit(p, sup_norm**0.5, viol)
    return TermsResult(I, II, III, not viol, viol)


def _log2_power(log_x: float, alpha: float) -> float:
    """ln(2 + x^alpha) from ln x, without overflow for huge x."""
    if log_x == -math.inf:
        return math.log(2.0)
    la = alpha * log_x
    if la < 700:
        return math.log(2.0 + math.exp(la))
    return la + math.log1p(2.0 * math.exp(-la))


def thm_pointwise_terms(p: BoundParams, norms: PotentialNorms) -> TermsResult:
    """Terms I, II, III for (1 + |x|/R)^{-rho} decaying potentials."""
    d = p.d
    R = p.R
    viol = _common_violations(p)
    if not 0.5 <= p.theta <= 1:
        viol.append(f"theta = {p.theta}: theta in [1/2,1]")
    if p.nu <= 0:
        viol.append(f"nu = {p.nu}: nu > 0")
    if p.kappa <= 0:
        viol.append(f"kappa = {p.kappa}: kappa > 0")
    need_rho = max(1 + p.nu + p.kappa, 2 * p.theta)
    if not p.rho > need_rho:
        viol.append(f"rho = {p.rho}: rho > max(1+nu+kappa, 2 theta) = {need_rho:.6g}")
    viol += _alpha_violation(p)
    if viol:
        return TermsResult(math.nan, math.nan, math.nan, False, viol)
    rR = p.r * R
    v = norms.v_rhoR
    I = (bracket(rR) ** (p.nu + p.kappa) * R / p.r * v) ** ((d - 1) / p.nu) + rR**d * (v**0.5 / p.r) ** (d / p.theta)
    II = rR**d * p.A ** (-d / p.theta)
    vg = norms.v_rhoRgamma
    log_inner = (1 - d) * math.log(p.delta) + math.log(R / p.r) + math.log(vg) if vg > 0 else -math.inf
    III = p.eps ** (1 - d) * _log2_power(log_inner, p.alpha) ** d
    viol = _admit(p, v**0.5, viol)
    return TermsResult(I, II, III, not viol, viol)


# ---------------------------------------------------------------------------
# example-specific forms


def semiclassical_inputs(sup_norm: float, r: float, h: float) -> tuple:
    """n_V(r, h) = n_{V/h^2}(r/h): the (sup norm, radius) fed to the compact bound."""
    if h <= 0:
        raise ValueError("h must be positive")
    return sup_norm / h**2, r / h


def sparse_example_rhs(r: float, M: float, C_M: float, offset: float = 1.0, d: int = 3) -> float:
    """[ln(2 + C_M^{2/(d+1)} r / (M - offset r))]^d for r << M."""
    gap = M - offset * r
    if gap <= 0:
        raise InadmissibleParameters(f"M - O(1) r = {gap} must be positive")
    return math.log(2 + C_M ** (2 / (d + 1)) * r / gap) ** d


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Calibration:
    constants: dict
    reference: dict = field(default_factory=dict)

    @classmethod
    def from_reference(cls, counts: dict, rhs: dict, reference: Optional[dict] = None) -> "Calibration":
        """C_thm = count / RHS on the reference configuration (ratio 1 there by construction)."""
        consts = {k: (counts[k] / rhs[k] if rhs[k] > 0 else math.inf) for k in rhs}
        return cls(consts, reference or {})


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log slope needs positive data")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def verdict(counts: dict, rhs: dict, calibration: Calibration, tol: float = 1e-12) -> dict:
    """{theorem: {'pass', 'ratio', 'C'}} with pass iff count <= C * RHS."""
    out = {}
    for k, rv in rhs.items():
        C = calibration.constants.get(k)
        if C is None or not math.isfinite(rv):
            out[k] = {"pass": None, "ratio": None, "C": C}
            continue
        ratio = counts[k] / (C * rv) if C * rv > 0 else (0.0 if counts[k] == 0 else math.inf)
        out[k] = {"pass": bool(ratio <= 1 + tol), "ratio": ratio, "C": C}
    return out


def slope_verdict(rs: Sequence[float], counts: Sequence[float], expected: float, window: float = 0.5) -> dict:
    s = loglog_slope(rs, counts)
    return {"slope": s, "expected": expected, "pass": bool(abs(s - expected) <= window)}


def sweep_to_csv(rows: Sequence[dict]) -> str:
    """One row per (theorem, parameter tuple)."""
    if not rows:
        return ""
    keys = list(rows[0].keys())
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys)
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def params_dict(p: BoundParams) -> dict:
    return asdict(p)


# theorem id -> which count it bounds
COUNT_KIND = {"lp": "N", "compact": "N", "pointwise": "N", "halfplane": "n_plus", "eigenvalue": "n_plus"}


def report_verdicts(report, calibration: Calibration, tol: float = 1e-12) -> dict:
    """Verdicts for a CountReport whose ``bound_values`` are keyed by theorem id.

    N_V bounds are checked against N (or the Jensen value when zeros were not
    located); the half-plane and eigenvalue bounds against n_plus.
    """
    N = report.N if report.N is not None else report.jensen_N
    counts, rhs = {}, {}
    for k, v in report.bound_values.items():
        c = N if COUNT_KIND.get(k, "N") == "N" else report.n_plus
        if c is None:
            continue
        counts[k], rhs[k] = c, v
    return verdict(counts, rhs, calibration, tol)


def calibrate_A0(family, alpha: int = 4, target: float = 0.5, d: int = 3, lo: float = 1e-4, hi: float = 1e4) -> float:
    """Smallest A with ||BS(lam0)^alpha|| <= target at lam0 = i (A/2) v0^{(d+1)/2}, maximized over ``family``.

    ``family`` is an iterable of (potential, grid) pairs.  |lam0| must stay below
    2 / (largest cell radius); beyond that the discrete norm no longer decays.
    """
    from .birman_schwinger import assemble_bs
    from .determinant import power_norm
    from .potentials import lp_norm

    best = 0.0
    for V, grid in family:
        v0 = lp_norm(V, (d + 1) / 2)
        if v0 == 0:
            continue
        scale = v0 ** ((d + 1) / 2)

        reach = 2.0 / float(np.max(grid.cell_radius))

        def ok(A):
            if A * scale / 2 > reach:
                raise RuntimeError(f"|lam0| = {A * scale / 2:.4g} exceeds the grid's resolved range {reach:.4g}; refine the grid")
            return power_norm(assemble_bs(V, grid, 1j * A * scale / 2), alpha) <= target

        if ok(lo):
            best = max(best, lo)
            continue
        # march upward instead of bisecting from hi: very large |lam0| leaves the
        # resolved range of the grid, where the discrete norm stops decaying
        a, b = lo, 2 * lo
        while not ok(b):
            a, b = b, 2 * b
            if b > hi:
                raise RuntimeError(f"no A <= {hi} reaches ||BS^alpha|| <= {target}")
        while b / a > 1.01:
            m = math.sqrt(a * b)
            a, b = (a, m) if ok(m) else (m, b)
        best = max(best, b)
    return best


def default_A(r: float, v0: float, A0: float, d: int = 3) -> float:
    """max(A0, r v0^{-(d+1)/2})."""
    return max(A0, corollary_A(r, v0, d)) if v0 > 0 else A0


# ---------------------------------------------------------------------------
# hypothesis reports


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


THEOREMS = ("lp", "halfplane", "eigenvalue", "compact", "pointwise")


def check_params(p: BoundParams, theorems: Sequence[str] = THEOREMS) -> list:
    """Every hypothesis used by ``theorems``, satisfied or not, with the numbers."""
    out = [
        Check("d odd >= 3", p.d >= 3 and p.d % 2 == 1, f"d = {p.d}"),
        Check("delta in (0,1]", 0 < p.delta <= 1, f"delta = {p.delta}"),
        Check("eps in (0,1]", 0 < p.eps <= 1, f"eps = {p.eps}"),
        Check("r > 0", p.r > 0, f"r = {p.r}"),
        Check("gamma > 0", p.gamma > 0, f"gamma = {p.gamma}"),
    ]
    if "lp" in theorems:
        out.append(Check("A > 0", p.A > 0, f"A = {p.A}"))
    if "halfplane" in theorems:
        top = p.gamma / math.sqrt(1 + p.delta) if p.delta > -1 else math.nan
        out.append(Check("eps <= gamma/sqrt(1+delta)", 0 < p.eps <= top * (1 + 1e-12), f"eps = {p.eps}, gamma/sqrt(1+delta) = {top:.6g}"))
    if "compact" in theorems or "pointwise" in theorems:
        lo = 0.5 if "pointwise" in theorems else 0.0
        label = "theta in [1/2,1]" if lo else "theta in (0,1]"
        out.append(Check(label, (lo <= p.theta <= 1) and p.theta > 0, f"theta = {p.theta}"))
        out.append(Check("nu > 0", p.nu > 0, f"nu = {p.nu}"))
        need = max((p.d - 1) / p.nu, p.d / (2 * p.theta)) if p.nu > 0 and p.theta > 0 else math.inf
        out.append(Check("alpha > max((d-1)/nu, d/(2 theta))", p.alpha > need, f"alpha = {p.alpha}, bound = {need:.6g}"))
    if "pointwise" in theorems:
        out.append(Check("kappa > 0", p.kappa > 0, f"kappa = {p.kappa}"))
        need = max(1 + p.nu + p.kappa, 2 * p.theta)
        out.append(Check("rho > max(1+nu+kappa, 2 theta)", p.rho > need, f"rho = {p.rho}, bound = {need:.6g}"))
    return out


def minimal_gamma(p: BoundParams, scale: float) -> float:
    """Smallest gamma meeting (1+delta)^{1/2} r + eps (A scale r + r^2)^{1/2} <= gamma."""
    return math.sqrt(1 + p.delta) * p.r + p.eps * math.sqrt(p.A * scale * p.r + p.r**2)
