"""H_alpha(lam) = det(I - (-BS(lam))^alpha) from eigenvalues, and log-det envelopes.

For even alpha this is det(I - BS^alpha); alpha = d + 1 gives H itself.  The
factorization 1 - (-mu)^alpha = prod_{omega^alpha = 1} (1 + omega mu) splits H_alpha
into analytic pieces det(I + omega B) (one per root of unity and symmetry block),
whose phases are stored separately so the argument principle can be applied per
piece.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .birman_schwinger import BSMatrix, assemble_bs
from .grids import SpaceGrid
from .potentials import Potential, PotentialNorms


class ZeroOnEvaluation(ArithmeticError):
    """An eigenvalue makes a determinant factor vanish exactly."""


class InadmissibleParameters(ValueError):
    """A hypothesis of an envelope or bound is violated; the message names it."""


def wrap_phase(theta):
    """Map angles to (-pi, pi]."""
    out = np.mod(np.asarray(theta) + np.pi, 2 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


@dataclass(frozen=True)
class DetSample:
    lam: complex
    log_modulus: float
    phase: float
    alpha: int
    tail_estimate: float
    component_logs: Optional[np.ndarray] = None  # log of each analytic factor, phase wrapped
    tail_ok: bool = True
    min_factor: float = math.inf  # smallest |1 + omega mu_j|: distance-to-zero indicator

    def __post_init__(self):
        if not math.isfinite(self.log_modulus):
            raise ValueError("log-modulus must be finite")
        if not self.tail_estimate >= 0:
            raise ValueError("tail estimate must be nonnegative")

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log_modulus + 1j * self.phase))


def tail_estimate(s: np.ndarray, alpha: float, d: int = 3) -> float:
    """Extrapolated sum_{k > N} s_k^alpha assuming s_k ~ C k^{-1/d} beyond the grid.

    C is taken from the upper half of the computed spectrum; the tail is infinite
    when alpha <= d.
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    if n == 0 or s[0] == 0:
        return 0.0
    if alpha <= d:
        return math.inf
    k = np.arange(1, n + 1)
    upper = slice(n // 2, n)
    C = float(np.max(s[upper] * k[upper] ** (1.0 / d)))
    return C**alpha * n ** (1.0 - alpha / d) / (alpha / d - 1.0)


def _roots_of_unity(alpha: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(alpha) / alpha)


def eval_det(M, alpha: int, d: int = 3, allow_low_power: bool = False, tail_tol: float = math.inf) -> DetSample:
    """log det(I - (-M)^alpha) as (log-modulus, principal phase).

    ``M`` is a :class:`BSMatrix` or a square array.  Powers below d + 1 are only
    meaningful for finite matrices and need ``allow_low_power``.
    """
    alpha = int(alpha)
    if alpha < 1 or (alpha < d + 1 and not allow_low_power):
        raise ValueError(f"alpha must be >= d + 1 = {d + 1} (pass allow_low_power for finite matrices)")
    if isinstance(M, BSMatrix):
        groups = M.block_eigenvalues
        s = M.singular_values
        lam = M.lam
    else:
        A = np.asarray(M, dtype=complex)
        groups = [np.linalg.eigvals(A)] if A.size else [np.zeros(0)]
        s = np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0)
        lam = 0j
    omegas = _roots_of_unity(alpha)
    comp = np.empty((len(groups), alpha), dtype=complex)
    min_factor = math.inf
    for b, mu in enumerate(groups):
        f = 1.0 + omegas[None, :] * mu[:, None]  # (n_eig, alpha)
        if f.size:
            min_factor = min(min_factor, float(np.min(np.abs(f))))
        if np.any(f == 0):
            raise ZeroOnEvaluation(f"(-mu)^alpha = 1 at lambda={lam}")
        logs = np.log(f).sum(axis=0)
        comp[b] = logs.real + 1j * wrap_phase(logs.imag)
    comp = comp.ravel()
    logmod = float(np.sum(comp.real))
    phase = float(wrap_phase(np.sum(comp.imag)))
    tail = tail_estimate(s, alpha, d)
    return DetSample(lam, logmod, phase, alpha, tail, comp, tail_ok=bool(tail <= tail_tol), min_factor=min_factor)


def det_on_contour(
    V: Potential,
    grid: SpaceGrid,
    contour: Sequence[complex],
    alpha: int,
    branch: str = "principal",
    gamma_region: float = math.inf,
    tail_tol: float = 1e-8,
    allow_low_power: bool = False,
) -> list:
    """One DetSample per contour node; nodes must satisfy Im lam > -gamma_region."""
    out = []
    for lam in contour:
        lam = complex(lam)
        if not lam.imag > -gamma_region:
            raise InadmissibleParameters(f"Im lambda = {lam.imag} outside the continuation region Im lambda > {-gamma_region}")
        M = assemble_bs(V, grid, lam, branch=branch)
        out.append(eval_det(M, alpha, allow_low_power=allow_low_power, tail_tol=tail_tol))
    return out


def samples_to_csv(samples: Sequence[DetSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["lambda_re", "lambda_im", "log_modulus", "phase", "tail_estimate"])
    for s in samples:
        w.writerow([repr(s.lam.real), repr(s.lam.imag), repr(s.log_modulus), repr(s.phase), repr(s.tail_estimate)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# matrix inequalities


def weyl_product_check(M, p: int = 4, slack: float = 1e-8) -> tuple:
    """(log|det(I - M^p)|, sum log(1 + s_k^p), holds) for the Weyl inequality."""
    if isinstance(M, BSMatrix):
        mu, s = M.eigenvalues, M.singular_values
    else:
        A = np.asarray(M, dtype=complex)
        mu, s = np.linalg.eigvals(A), np.linalg.svd(A, compute_uv=False)
    lhs = float(np.sum(np.log(np.abs(1.0 - mu**p))))
    rhs = float(np.sum(np.log1p(s**p)))
    return lhs, rhs, bool(lhs <= rhs + slack * max(1.0, abs(rhs)))


def power_norm(M, alpha: int) -> float:
    """Operator norm of M^alpha (block-wise for circulant storage)."""
    mats = M.blocks if isinstance(M, BSMatrix) and M.blocks is not None else [M.dense if isinstance(M, BSMatrix) else np.asarray(M)]
    return max(float(np.linalg.norm(np.linalg.matrix_power(b, alpha), 2)) for b in mats)


def small_norm_check(M, alpha: int, slack: float = 1e-8) -> Optional[tuple]:
    """(-ln|H_alpha|, sum ln(1 + 2 s_k^alpha), holds) when ||M^alpha|| <= 1/2, else None."""
    if power_norm(M, alpha) > 0.5:
        return None
    sample = eval_det(M, alpha, allow_low_power=True)
    s = M.singular_values if isinstance(M, BSMatrix) else np.linalg.svd(np.asarray(M), compute_uv=False)
    lhs = -sample.log_modulus
    rhs = float(np.sum(np.log1p(2.0 * s**alpha)))
    return lhs, rhs, bool(lhs <= rhs + slack * max(1.0, abs(rhs)))


def log_sum_planted(M: float, alpha: float, beta: float, n_terms: int = 200000) -> float:
    """sum_{k >= 1} ln(1 + (M k^{-1/beta})^alpha), with an integral tail beyond n_terms."""
    k = np.arange(1, n_terms + 1, dtype=float)
    head = float(np.sum(np.log1p((M * k ** (-1.0 / beta)) ** alpha)))
    # decreasing summand: the tail sum is at most its integral from n_terms,
    # expanded termwise in x = M^alpha n^{-a}
    a = alpha / beta
    x = M**alpha * n_terms ** (-a)
    if x >= 0.5:
        raise ValueError("raise n_terms: the tail series needs M^alpha n^(-alpha/beta) < 1/2")
    j = np.arange(1, 80)
    tail = n_terms * float(np.sum((-1.0) ** (j + 1) * x**j / (j * (j * a - 1.0))))
    return head + tail


def log_sum_constant(alpha: float, beta: float) -> float:
    """C with sum_k ln(1 + (M k^{-1/beta})^alpha) <= C M^beta: int_0^inf ln(1 + u^{-alpha/beta}) du."""
    if alpha <= beta:
        raise ValueError("need alpha > beta")
    return math.pi / math.sin(math.pi * beta / alpha)


# ---------------------------------------------------------------------------
# envelopes (constant-free)


def c_delta(delta: float, d: int = 3) -> float:
    if not 0 < delta <= 1:
        raise InadmissibleParameters("delta must lie in (0, 1]")
    return delta ** (-((d - 1) ** 2) / (d + 1))


def logdet_envelope_upper(lam: complex, norms: PotentialNorms, d: int = 3) -> float:
    """|lam|^{-2} v0^{d+1} for Im lam >= 0."""
    lam = complex(lam)
    if lam.imag < 0:
        raise InadmissibleParameters("upper envelope needs Im lambda >= 0")
    return abs(lam) ** -2 * norms.v0 ** (d + 1)


def lower_admissible(lam: complex, gamma: float, delta: float, eps: float) -> Optional[str]:
    lam = complex(lam)
    lhs = math.sqrt(1 + delta) * abs(lam.imag) + eps * abs(lam)
    if lhs > gamma:
        return f"(1+delta)^(1/2)|Im lambda| + eps|lambda| = {lhs:.6g} > gamma = {gamma:.6g}"
    return None


def logdet_envelope_lower(lam: complex, norms: PotentialNorms, delta: float, eps: float, d: int = 3) -> float:
    """|lam|^{-2} v0^{d+1} + eps^{1-d} [ln(2 + |lam|^{-2} (c_delta v_gamma)^{d+1})]^d."""
    lam = complex(lam)
    if not 0 < eps <= 1:
        raise InadmissibleParameters("eps must lie in (0, 1]")
    cd = c_delta(delta, d)
    bad = lower_admissible(lam, norms.gamma, delta, eps)
    if bad:
        raise InadmissibleParameters(bad)
    a2 = abs(lam) ** -2
    return a2 * norms.v0 ** (d + 1) + eps ** (1 - d) * math.log(2 + a2 * (cd * norms.v_gamma) ** (d + 1)) ** d
