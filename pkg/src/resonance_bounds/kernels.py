"""Free resolvent and Fourier-extension kernels in three dimensions.

The outgoing resolvent kernel e^{i lam r}/(4 pi r) is entire in lam, and so is
the extension kernel int_{S^2} e^{i lam z.xi} dS(xi) = 4 pi sin(lam|z|)/(lam|z|).
Their relation R0(lam) - R0(-lam) = a3 * lam * E(lam) E(conj lam)^* fixes
a3 = i / (8 pi^2); :func:`stone_residual` re-checks it by quadrature.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grids import FOUR_PI, SphereRule, required_sphere_degree, sphere_rule


@dataclass(frozen=True)
class KernelConstants:
    a_d: complex
    d: int = 3


A3 = KernelConstants(a_d=1j / (8.0 * math.pi**2), d=3)


def resolvent_kernel(lam: complex, x, y) -> complex:
    """Outgoing free resolvent kernel in d = 3."""
    r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    if np.any(r == 0):
        raise ValueError("resolvent kernel is singular at coincident points")
    return np.exp(1j * lam * r) / (FOUR_PI * r)


def entire_sinc(w2) -> np.ndarray:
    """sin(sqrt(w2))/sqrt(w2), even in the root hence single-valued; w2 may be complex."""
    w2 = np.asarray(w2, dtype=complex)
    w = np.sqrt(w2)
    small = np.abs(w2) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 1.0 - w2 / 6.0 + w2**2 / 120.0, np.sin(w) / np.where(small, 1.0, w))
    return out


def extension_kernel(lam: complex, z) -> np.ndarray:
    """int_{S^2} exp(i lam z.xi) dS(xi) for real vectors z (last axis)."""
    r = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
    return FOUR_PI * entire_sinc((lam * r) ** 2)


def conjugated_extension_kernel(lam: complex, x, y) -> np.ndarray:
    """Kernel of E(lam) E(lam)^*: int exp(i lam x.xi - i conj(lam) y.xi) dS(xi).

    The exponent is i w.xi with the complex vector w = Re(lam)(x - y) + i Im(lam)(x + y),
    and the sphere integral is 4 pi sinc of sqrt(w.w) (bilinear, no conjugation).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = lam.real * (x - y) + 1j * lam.imag * (x + y)
    return FOUR_PI * entire_sinc(np.sum(w * w, axis=-1))


def extension_quadrature(lam: complex, z, rule: SphereRule) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return np.exp(1j * lam * (z @ rule.nodes.T)) @ rule.weights


def stone_residual(
    lam: complex,
    sample_pairs: Sequence,
    rule: SphereRule,
    constants: KernelConstants = A3,
    quadrature_tol: float = 1e-10,
) -> float:
    """max over pairs of |R0(lam)-R0(-lam) kernel - a3 lam * quadrature of E E^* kernel|.

    The sphere quadrature is also compared with the closed form; a disagreement
    above ``quadrature_tol`` means the rule is unusable and raises.
    """
    x = np.array([p[0] for p in sample_pairs], dtype=float)
    y = np.array([p[1] for p in sample_pairs], dtype=float)
    z = x - y
    r = np.linalg.norm(z, axis=-1)
    need = required_sphere_degree(lam, float(r.max(initial=0.0)))
    if rule.degree < need:
        raise ValueError(f"sphere rule degree {rule.degree} below required {need}")
    quad = extension_quadrature(lam, z, rule)
    closed = extension_kernel(lam, z)
    scale = np.maximum(1.0, np.abs(closed))
    if np.max(np.abs(quad - closed) / scale) > quadrature_tol:
        raise RuntimeError("sphere quadrature disagrees with the closed-form extension kernel")
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = np.where(r > 0, (np.exp(1j * lam * r) - np.exp(-1j * lam * r)) / (FOUR_PI * np.where(r > 0, r, 1.0)), 2j * lam / FOUR_PI)
    rhs = constants.a_d * lam ** (constants.d - 2) * quad
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def verify_stone_constant(max_abs_lambda: float = 5.0, max_r: float = 2.0, seed: int = 0) -> float:
    """Startup self-check of a3 on a small random sample; returns the residual."""
    rng = np.random.default_rng(seed)
    pairs = [(rng.uniform(-1, 1, 3) * max_r / 2 / math.sqrt(3), rng.uniform(-1, 1, 3) * max_r / 2 / math.sqrt(3)) for _ in range(8)]
    lam = complex(max_abs_lambda * 0.6, -max_abs_lambda * 0.3)
    rule = sphere_rule(required_sphere_degree(abs(lam) + 1, max_r) + 8)
    res = stone_residual(lam, pairs, rule)
    if res > 1e-10:
        raise RuntimeError(f"Stone constant check failed: residual {res:.3e}")
    return res


# ---------------------------------------------------------------------------
# powers of (I - eps^2 Laplace-Beltrami) on S^2


@dataclass(frozen=True)
class SphereOperator:
    eps: float
    l: int
    lmax: int = 64

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.l < 0 or self.lmax < 0:
            raise ValueError("l and lmax must be nonnegative")

    def eigenvalue(self, ell: int) -> float:
        return 1.0 + self.eps**2 * ell * (ell + 1)

    def spectrum(self) -> np.ndarray:
        """Singular values of (I - eps^2 Delta_S)^{-l}, nonincreasing, with multiplicity."""
        ell = np.arange(self.lmax + 1)
        vals = (1.0 + self.eps**2 * ell * (ell + 1.0)) ** (-float(self.l))
        return np.repeat(vals, 2 * ell + 1)


def sphere_power_singvals(op: SphereOperator, k: int) -> float:
    """k-th (1-based) singular value of (I - eps^2 Delta_S)^{-l} on S^2."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > (op.lmax + 1) ** 2:
        raise ValueError(f"lmax={op.lmax} reaches only index {(op.lmax + 1) ** 2}")
    return float(op.spectrum()[k - 1])


def weyl_envelope_constant(eps_values: Iterable[float], l_values: Iterable[int], kmax: int) -> float:
    """Largest c with s_k <= (c eps sqrt(k))^{-2l} on the whole (eps, l, k <= kmax) grid."""
    lmax = int(math.isqrt(kmax)) + 1
    best = math.inf
    k = np.arange(1, kmax + 1)
    for eps in eps_values:
        for l in l_values:
            s = SphereOperator(eps, l, lmax).spectrum()[:kmax]
            best = min(best, float(np.min(s ** (-1.0 / (2 * l)) / (eps * np.sqrt(k)))))
    return best


# ---------------------------------------------------------------------------
# stationary-phase envelopes


@dataclass(frozen=True)
class EnvelopeFit:
    C: float
    rows: tuple  # (lam_re, lam_im, r, bound, value, C_fit)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["lambda_re", "lambda_im", "r", "bound", "value", "C_fit"])
        w.writerows(self.rows)
        return buf.getvalue()


def kernel_envelope_check(lam: complex, samples: Sequence, conjugated: bool = False, d: int = 3) -> EnvelopeFit:
    """Smallest C with |K(x, y)| <= C * envelope on the sample pairs.

    Plain kernel: envelope e^{|Im lam| |x-y|} (1 + |lam| |x-y|)^{-(d-1)/2}.
    Conjugated kernel (E(lam)E(lam)^*): e^{|Im lam| |x+y|}
    (1 + |Re lam| |x-y| + |Im lam| |x+y|)^{-(d-1)/2}.
    """
    half = (d - 1) / 2.0
    rows = []
    C = 0.0
    for x, y in samples:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rm = float(np.linalg.norm(x - y))
        if conjugated:
            rp = float(np.linalg.norm(x + y))
            value = abs(complex(conjugated_extension_kernel(lam, x, y)))
            env = math.exp(abs(lam.imag) * rp) * (1 + abs(lam.real) * rm + abs(lam.imag) * rp) ** (-half)
        else:
            value = abs(complex(extension_kernel(lam, x - y)))
            env = math.exp(abs(lam.imag) * rm) * (1 + abs(lam) * rm) ** (-half)
        c_fit = value / env
        C = max(C, c_fit)
        rows.append((lam.real, lam.imag, rm, env, value, c_fit))
    return EnvelopeFit(C=C, rows=tuple(rows))


# a3 is hard-coded above; confirm it against the kernel identity once per import
STONE_STARTUP_RESIDUAL = verify_stone_constant()
