"""Determinant-free resonance oracles from explicit secular functions.

Radial well V = V0 on B(0, R) in d = 3.  With kappa^2 = lam^2 - V0, the regular
interior solution j_l(kappa r) is matched to the outgoing h_l(lam r) at r = R.
Writing A_l(z) = j_l(z)/z^l (entire in z^2), B_l = A_{l-1} - l A_l with
A_{-1}(z) = cos z, and expanding h_l(z) = e^{iz} z^{-l-1} X(z) with the
polynomial X(z) = sum_k c_k z^{l-k}, c_k = (l+k)!/(k!(l-k)!) (i/2)^k, the
matching condition becomes

    S_l(lam) = B_l(kappa R) X(lam R) - A_l(kappa R) Y(lam R) = 0,
    Y(z) = i sum_k c_k z^{l+1-k} - sum_k k c_k z^{l-k}.

S_l depends on kappa only through kappa^2, so it is entire in lam and needs no
branch choice.  For l = 0 it reads cos(kappa R) - i lam R sin(kappa R)/(kappa R).
Each root carries multiplicity 2l + 1.

Square well V = V0 on [-a, a] in d = 1: resonances are the zeros of the entire
function D(lam) = i lam cos(2 kappa a) + (kappa^2 + lam^2) a sinc(2 kappa a), the
product of the even-parity factor kappa sin(kappa a) + i lam cos(kappa a) and the
odd-parity factor cos(kappa a) - i lam sin(kappa a)/kappa.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from math import factorial
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.special import jv

from .counting import (
    Evaluator,
    ZeroNearContour,
    adaptive_winding,
    circle_path,
    locate_zeros,
    merge_zeros,
)

SQRT_HALF_PI = math.sqrt(math.pi / 2)


def _double_factorial_odd(n: int) -> float:
    out = 1.0
    for k in range(1, n + 1, 2):
        out *= k
    return out


def reduced_bessel(ell: int, z2) -> np.ndarray:
    """A_l(z) = j_l(z) / z^l as a function of z^2 (A_{-1} = cos z)."""
    z2 = np.asarray(z2, dtype=complex)
    z = np.sqrt(z2)
    if ell == -1:
        return np.cos(z)
    small = np.abs(z) < 0.5
    zz = np.where(small, 1.0, z)
    big = SQRT_HALF_PI * jv(ell + 0.5, zz) / zz ** (ell + 0.5)
    # power series sum_k (-z^2/2)^k / (k! (2l+2k+1)!!)
    term = np.ones_like(z2) / _double_factorial_odd(2 * ell + 1)
    ser = term.copy()
    for k in range(1, 20):
        term = term * (-z2 / 2.0) / (k * (2 * ell + 2 * k + 1))
        ser = ser + term
    return np.where(small, ser, big)


def _hankel_poly(ell: int):
    return [factorial(ell + k) / (factorial(k) * factorial(ell - k)) * (0.5j) ** k for k in range(ell + 1)]


def secular_terms(ell: int, lam, V0: complex, R: float = 1.0):
    """(B X, A Y) whose difference is S_l; their moduli normalize residuals."""
    lam = np.asarray(lam, dtype=complex)
    z2 = (lam**2 - V0) * R * R
    a = reduced_bessel(ell, z2)
    b = reduced_bessel(ell - 1, z2) - ell * a
    z = lam * R
    c = _hankel_poly(ell)
    X = sum(c[k] * z ** (ell - k) for k in range(ell + 1))
    Y = 1j * sum(c[k] * z ** (ell + 1 - k) for k in range(ell + 1)) - sum(k * c[k] * z ** (ell - k) for k in range(ell + 1))
    return b * X, a * Y


def radial_secular(ell: int, lam, V0: complex, R: float = 1.0):
    bx, ay = secular_terms(ell, lam, V0, R)
    return bx - ay


def radial_residual(ell: int, lam: complex, V0: complex, R: float = 1.0) -> float:
    bx, ay = secular_terms(ell, lam, V0, R)
    return float(abs(bx - ay) / (abs(bx) + abs(ay)))


def _secular_terms_mp(ell: int, lam, V0, R, dps: int = 40):
    """secular_terms in extended precision, for channels where double rounding dominates."""
    with mpmath.workdps(dps):
        lam, V0, R = mpmath.mpc(lam), mpmath.mpc(V0), mpmath.mpf(R)
        z2 = (lam**2 - V0) * R * R

        def red(l):
            z = mpmath.sqrt(z2)
            if l == -1:
                return mpmath.cos(z)
            if abs(z) < 0.5:
                term = 1 / mpmath.fac2(2 * l + 1)
                acc = term
                for k in range(1, 40):
                    term *= (-z2 / 2) / (k * (2 * l + 2 * k + 1))
                    acc += term
                return acc
            return mpmath.sqrt(mpmath.pi / 2) * mpmath.besselj(l + mpmath.mpf(1) / 2, z) / z ** (l + mpmath.mpf(1) / 2)

        a = red(ell)
        b = red(ell - 1) - ell * a
        z = lam * R
        c = [mpmath.factorial(ell + k) / (mpmath.factorial(k) * mpmath.factorial(ell - k)) * (mpmath.mpc(0, 0.5)) ** k for k in range(ell + 1)]
        X = mpmath.fsum(c[k] * z ** (ell - k) for k in range(ell + 1))
        Y = 1j * mpmath.fsum(c[k] * z ** (ell + 1 - k) for k in range(ell + 1)) - mpmath.fsum(k * c[k] * z ** (ell - k) for k in range(ell + 1))
        return b * X, a * Y


def _mp_secular(ell: int, V0, R):
    def f(lam):
        bx, ay = _secular_terms_mp(ell, complex(lam), V0, R, 30)
        return complex(bx - ay)

    return f


def refine_root_mp(ell: int, lam: complex, V0: complex, R: float = 1.0, dps: int = 40) -> tuple:
    """Polish a simple root in extended precision; returns (root, relative residual)."""
    with mpmath.workdps(dps):
        f = lambda x: (lambda t: t[0] - t[1])(_secular_terms_mp(ell, x, V0, R, dps))
        z = mpmath.findroot(f, mpmath.mpc(lam), solver="secant", tol=mpmath.mpf(10) ** (-dps + 10))
        bx, ay = _secular_terms_mp(ell, z, V0, R, dps)
        res = abs(bx - ay) / (abs(bx) + abs(ay))
        return complex(z), float(res)


@dataclass
class RadialMode:
    ell: int
    V0: complex
    R: float
    roots: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def multiplicity(self) -> int:
        return 2 * self.ell + 1


def ell_cutoff(r: float, V0: complex, R: float) -> int:
    """Angular momenta above this have no roots in |lam| <= r (checked, see oracle_3d_radial).

    Inside the well the regular solution is negligible once l exceeds the
    classical turning value e |kappa| R / 2; we take kappa at the disk edge and
    add a margin.
    """
    kappa = math.sqrt(r * r + abs(V0))
    return int(math.ceil(math.e * (r + kappa) * R / 2.0)) + 2


def _certify(f, z: complex, mult: int, rho: float = 1e-4) -> bool:
    try:
        w = adaptive_winding(Evaluator(f, analytic=True), circle_path(z, rho), n_nodes=16).total
    except ZeroNearContour:
        return False
    return w == mult


def oracle_3d_radial(
    V0: complex,
    R: float = 1.0,
    r: float = 4.0,
    ell_max: Optional[int] = None,
    residual_tol: float = 1e-10,
    n_nodes: int = 256,
) -> list:
    """Roots of S_l in |lam| <= r for l = 0..ell_max.

    The per-channel winding on |lam| = r fixes how many roots each channel must
    yield; subdivision plus Newton then finds them.  If no ``ell_max`` is given
    the channels are scanned up to :func:`ell_cutoff`, and the two channels past
    the last one with roots must have zero winding.
    """
    auto = ell_max is None
    ell_max = ell_cutoff(r, V0, R) if auto else ell_max
    modes = []
    ell = 0
    empty_run = 0
    while ell <= ell_max or (auto and empty_run < 2):
        f = lambda lam, ell=ell: radial_secular(ell, lam, V0, R)
        ev = Evaluator(f, analytic=True)
        w = adaptive_winding(ev, circle_path(0j, r), n_nodes=n_nodes).total
        mode = RadialMode(ell, complex(V0), R)
        if w:
            zs = locate_zeros(ev, (-r, r, -r, r), min_size=1e-9)
            roots = [(z, m) for z, m in merge_zeros(zs) if abs(z) <= r]
            if sum(m for _, m in roots) != w:
                raise RuntimeError(f"l={ell}: located {sum(m for _, m in roots)} roots, winding says {w}")
            for z, m in roots:
                res = radial_residual(ell, z, V0, R)
                if res > residual_tol and m == 1:
                    z, res = refine_root_mp(ell, z, V0, R)
                if res > residual_tol:
                    raise RuntimeError(f"l={ell}: root {z} has residual {res:.2e}")
                if not (_certify(f, z, m) or _certify(_mp_secular(ell, V0, R), z, m)):
                    raise RuntimeError(f"l={ell}: root {z} fails the winding certificate")
                mode.roots.extend([z] * m)
                mode.residuals.extend([res] * m)
            empty_run = 0
        else:
            empty_run += 1
        modes.append(mode)
        ell += 1
        if ell > 10 * (ell_max + 10):
            raise RuntimeError("angular-momentum scan did not terminate")
    return modes


def radial_total(modes: Sequence[RadialMode], r: Optional[float] = None) -> int:
    """sum_l (2l + 1) #roots (optionally restricted to |lam| <= r)."""
    return sum(m.multiplicity * sum(1 for z in m.roots if r is None or abs(z) <= r) for m in modes)


def radial_zero_list(modes: Sequence[RadialMode]) -> list:
    """(location, multiplicity) pairs with the 2l + 1 degeneracy folded in."""
    return [(z, m.multiplicity) for m in modes for z in m.roots]


def modes_to_csv(modes: Sequence[RadialMode]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["ell", "lambda_re", "lambda_im", "residual"])
    for m in modes:
        for z, res in zip(m.roots, m.residuals):
            w.writerow([m.ell, repr(z.real), repr(z.imag), repr(res)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# d = 1 square well


def _sinc_sq(z2):
    """sin(z)/z as a function of z^2."""
    z2 = np.asarray(z2, dtype=complex)
    z = np.sqrt(z2)
    small = np.abs(z2) < 1e-6
    return np.where(small, 1 - z2 / 6 + z2**2 / 120, np.sin(z) / np.where(small, 1.0, z))


def squarewell_factors(lam, V0: complex, a: float):
    """(even, odd) parity factors, both entire in lam."""
    lam = np.asarray(lam, dtype=complex)
    k2 = lam**2 - V0
    cos_ka = np.cos(np.sqrt(k2) * a)
    sin_over_k = a * _sinc_sq(k2 * a * a)  # sin(kappa a)/kappa
    even = k2 * sin_over_k + 1j * lam * cos_ka
    odd = cos_ka - 1j * lam * sin_over_k
    return even, odd


def squarewell_secular(lam, V0: complex, a: float):
    """D(lam) = i lam cos(2 kappa a) + (kappa^2 + lam^2) a sinc(2 kappa a)."""
    lam = np.asarray(lam, dtype=complex)
    k2 = lam**2 - V0
    return 1j * lam * np.cos(2 * np.sqrt(k2) * a) + (k2 + lam**2) * a * _sinc_sq(4 * k2 * a * a)


def oracle_1d_squarewell(V0: complex, a: float = 1.0, r: float = 6.0, residual_tol: float = 1e-10) -> list:
    """Roots of D in |lam| <= r, found separately for each parity factor.

    For V0 = 0, D reduces to i lam e^{-2 i lam a}; its zero at lam = 0 is the free
    threshold, not a resonance, so the free well returns no roots.
    """
    if V0 == 0:
        return []
    roots = []
    for parity in (0, 1):
        f = lambda lam, p=parity: squarewell_factors(lam, V0, a)[p]
        ev = Evaluator(f, analytic=True)
        zs = locate_zeros(ev, (-r, r, -r, r), min_size=1e-9)
        for z, m in merge_zeros(zs):
            if abs(z) > r:
                continue
            scale = abs(squarewell_factors(z, V0, a)[1 - parity]) * (1 + abs(z)) ** 2
            res = abs(complex(squarewell_secular(z, V0, a))) / max(scale, 1e-300)
            if res > residual_tol:
                raise RuntimeError(f"1D root {z} has residual {res:.2e}")
            roots.extend([complex(z)] * m)
    return sorted(roots, key=lambda z: (abs(z), z.real))


def count_secular_1d(V0: complex, a: float, r: float, n_nodes: int = 256) -> int:
    """Winding of D itself on |lam| = r (the counting-machinery side of the cross-check)."""
    if V0 == 0:
        return 0
    ev = Evaluator(lambda lam: squarewell_secular(lam, V0, a), analytic=True)
    return adaptive_winding(ev, circle_path(0j, r), n_nodes=n_nodes).total


def sigma_rectangle(a: float, C: float) -> tuple:
    """(Re z range, Im z range) of {C^-1 (a/ln a)^2 <= Re z <= C (a/ln a)^2, C^-1 <= Im z <= C}."""
    s = (a / math.log(a)) ** 2
    return (s / C, s * C), (1.0 / C, C)


def _sigma_secular(z, V0: complex, a: float):
    """D(sqrt z) e^{i theta}, theta = 2 a sqrt(z - V0): same zeros, no overflow for Im theta > 0."""
    z = complex(z)
    lam = cmath.sqrt(z)
    kappa = cmath.sqrt(z - V0)
    e = cmath.exp(4j * kappa * a)
    return 1j * lam * (e + 1) / 2 + (kappa**2 + lam**2) * (e - 1) / (4j * kappa)


def count_eigenvalues_in_sigma(V0: complex, a: float, C: float, n_nodes: int = 512, perturb: float = 0.01) -> tuple:
    """(count, C used): zeros of D(sqrt z) in the z-plane rectangle Sigma (eigenvalues z = lam^2, Im lam > 0).

    An eigenvalue on the boundary makes the count undecidable; C is then nudged by
    +-perturb, which moves every edge.
    """
    from .counting import rectangle_path

    last = None
    for c in (C, C * (1 - perturb), C * (1 + perturb)):
        (x0, x1), (y0, y1) = sigma_rectangle(a, c)
        # sqrt z is analytic in the upper half-plane; sqrt(z - V0) needs Re z > Re V0 off its cut
        if x0 <= complex(V0).real and y0 <= complex(V0).imag <= y1:
            raise ValueError("Sigma meets the branch cut of sqrt(z - V0)")
        # the phase turns by up to 2|d theta| per step; start fine enough that no step aliases
        path = rectangle_path(x0, x1, y0, y1)
        t = np.linspace(0.0, 1.0, 40001)
        theta = 2 * a * np.sqrt(np.array([path(u) for u in t]) - V0)
        per_side = [np.sum(np.abs(np.diff(theta[k * 10000 : (k + 1) * 10000 + 1]))) for k in range(4)]
        nodes = max(n_nodes, 4 * int(math.ceil(max(per_side) * 2 / (math.pi / 8))))
        ev = Evaluator(lambda z: _sigma_secular(z, V0, a), analytic=True)
        try:
            return adaptive_winding(ev, path, n_nodes=nodes, max_nodes=2 * nodes + 200000).total, c
        except ZeroNearContour as exc:
            last = exc
    raise last


# ---------------------------------------------------------------------------
# comparison


@dataclass
class Comparison:
    match: bool
    determinant_n: int
    oracle_n: int
    pairing: list = field(default_factory=list)  # (det zero, nearest oracle zero, distance)
    contour_distance: Optional[float] = None


def compare_counts(determinant_n: int, oracle_n: int, det_zeros=(), oracle_zeros=(), radius: Optional[float] = None) -> Comparison:
    """Exact integer comparison; on mismatch the zero lists are paired by nearest neighbour."""
    out = Comparison(determinant_n == oracle_n, determinant_n, oracle_n)
    if not out.match:
        oz = [complex(z[0]) if isinstance(z, tuple) else complex(z) for z in oracle_zeros]
        for z in det_zeros:
            zc = complex(z[0]) if isinstance(z, tuple) else complex(z)
            if oz:
                j = int(np.argmin([abs(zc - w) for w in oz]))
                out.pairing.append((zc, oz[j], abs(zc - oz[j])))
        if radius is not None:
            allz = [complex(z[0]) if isinstance(z, tuple) else complex(z) for z in list(det_zeros) + list(oracle_zeros)]
            if allz:
                out.contour_distance = float(min(abs(abs(z) - radius) for z in allz))
    return out


def oracle_upper_radial(V0: complex, R: float = 1.0, r: float = 8.0, residual_tol: float = 1e-10, n_nodes: int = 256) -> list:
    """Roots of S_l with Im lam > 0 and |Re lam|, Im lam <= r (eigenvalues lam^2 of -Lap + V).

    Same channel scan as :func:`oracle_3d_radial` but on the upper box only, so
    the many lower-half resonances are never located.
    """
    from .counting import rectangle_path

    eta = 1e-9 * r
    ell_max = ell_cutoff(r, V0, R)
    modes, ell, empty_run = [], 0, 0
    while ell <= ell_max or empty_run < 2:
        f = lambda lam, ell=ell: radial_secular(ell, lam, V0, R)
        ev = Evaluator(f, analytic=True)
        w = adaptive_winding(ev, rectangle_path(-r, r, eta, r), n_nodes=n_nodes).total
        mode = RadialMode(ell, complex(V0), R)
        if w:
            zs = locate_zeros(ev, (-r, r, eta, r), min_size=1e-9)
            roots = merge_zeros(zs)
            if sum(m for _, m in roots) != w:
                raise RuntimeError(f"l={ell}: located {sum(m for _, m in roots)} upper roots, winding says {w}")
            for z, m in roots:
                res = radial_residual(ell, z, V0, R)
                if res > residual_tol and m == 1:
                    z, res = refine_root_mp(ell, z, V0, R)
                if res > residual_tol:
                    raise RuntimeError(f"l={ell}: root {z} has residual {res:.2e}")
                mode.roots.extend([z] * m)
                mode.residuals.extend([res] * m)
            empty_run = 0
        else:
            empty_run += 1
        modes.append(mode)
        ell += 1
        if ell > 10 * (ell_max + 10):
            raise RuntimeError("angular-momentum scan did not terminate")
    return modes


def squarewell_residual_csv(roots: Sequence[complex], V0: complex, a: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["lambda_re", "lambda_im", "abs_D"])
    for z in roots:
        w.writerow([repr(z.real), repr(z.imag), repr(abs(complex(squarewell_secular(z, V0, a))))])
    return buf.getvalue()
