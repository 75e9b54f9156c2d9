"""Nyström discretization of BS(lam) = |V|^{1/2} R0(lam) V^{1/2} and its singular spectra.

Entry (j, k) is sqrt(w_j w_k) |V_j|^{1/2} G(x_j, x_k) V_k^{1/2}, so singular values
and eigenvalues coincide with those of the Nyström operator.

Diagonal.  With a Newtonian potential N(x) = int dy/(4 pi |x - y|) of the grid's
region available, the weakly singular diagonal is obtained by singularity
subtraction: w_i G_ii = N(x_i) - sum_{k != i} w_k/(4 pi r_ik) + w_i i lam/(4 pi).
Otherwise the cell-averaged kernel 3/(8 pi h_i) over the equivalent ball is used.

Cyclic grids.  If the grid is a product grid with ``n_azimuth`` nodes per ring and
V is constant on each ring, the matrix is block-circulant and is stored as the
``n_azimuth`` Fourier blocks (each ``n_rings`` square).  Eigenvalues and singular
values are the union over blocks.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .grids import FOUR_PI, SpaceGrid
from .potentials import Potential, lp_norm

BRANCHES = ("principal", "polar")


def sqrt_factors(values: np.ndarray, branch: str = "principal"):
    """(|V|^{1/2}, V^{1/2}) at the nodes.

    ``principal`` uses the principal complex root; ``polar`` uses V/|V|^{1/2}, for
    which |V|^{1/2} V^{1/2} = V and det(I + BS) vanishes exactly at resonances.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    mod = np.sqrt(np.abs(values))
    if branch == "principal":
        return mod, np.sqrt(values.astype(complex))
    with np.errstate(invalid="ignore", divide="ignore"):
        return mod, np.where(mod > 0, values / np.where(mod > 0, mod, 1.0), 0.0)


@dataclass(frozen=True, eq=False)
class BSMatrix:
    """Discretized BS(lambda); either ``entries`` or the circulant ``blocks`` are stored."""

    lam: complex
    grid: SpaceGrid
    potential: Optional[Potential]
    entries: Optional[np.ndarray] = None
    blocks: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.entries is None) == (self.blocks is None):
            raise ValueError("give exactly one of entries or blocks")
        arr = self.entries if self.entries is not None else self.blocks
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite Birman-Schwinger entries")

    @property
    def size(self) -> int:
        if self.entries is not None:
            return self.entries.shape[0]
        return self.blocks.shape[0] * self.blocks.shape[1]

    @cached_property
    def dense(self) -> np.ndarray:
        if self.entries is not None:
            return self.entries
        n_az, n_r, _ = self.blocks.shape
        # K(c)[i, j] = M[(i, c), (j, 0)], recovered by inverse FFT over the block index
        K = np.fft.ifft(self.blocks, axis=0)  # (c, i, j)
        c = (np.arange(n_az)[:, None] - np.arange(n_az)[None, :]) % n_az  # a - b
        M = K[c]  # (a, b, i, j)
        return np.ascontiguousarray(M.transpose(2, 0, 3, 1).reshape(n_r * n_az, n_r * n_az))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.entries is not None:
            return np.linalg.eigvals(self.entries)
        return np.concatenate([np.linalg.eigvals(b) for b in self.blocks])

    @cached_property
    def block_eigenvalues(self) -> list:
        """Eigenvalues grouped by symmetry block (one group for unstructured matrices)."""
        if self.entries is not None:
            return [self.eigenvalues]
        return [np.linalg.eigvals(b) for b in self.blocks]

    @cached_property
    def singular_values(self) -> np.ndarray:
        try:
            if self.entries is not None:
                s = np.linalg.svd(self.entries, compute_uv=False)
            else:
                s = np.concatenate([np.linalg.svd(b, compute_uv=False) for b in self.blocks])
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"SVD failed at lambda={self.lam}") from exc
        return np.sort(s)[::-1]


def _check_cover(V: Potential, grid: SpaceGrid, values: np.ndarray, tol: float) -> None:
    quad = float(np.sum(grid.weights * np.abs(values) ** 2))
    exact = lp_norm(V, 2.0) ** 2
    if exact == 0.0:
        return
    if abs(quad - exact) > tol * exact:
        raise ValueError(
            f"grid does not resolve the potential: quadrature of |V|^2 is {quad:.10g}, exact {exact:.10g} "
            "(align grid with supp V, or enlarge the truncation ball)"
        )


def _ring_constant(values: np.ndarray, grid: SpaceGrid) -> bool:
    if grid.n_azimuth is None:
        return False
    v = values.reshape(grid.n_rings, grid.n_azimuth)
    return bool(np.allclose(v, v[:, :1], rtol=1e-13, atol=1e-300))


def _kernel(lam: complex, r: np.ndarray, kind: str) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "resolvent":
            return np.exp(1j * lam * r) / (FOUR_PI * r)
        return 2j * np.sin(lam * r) / (FOUR_PI * r)


def _ball_mean_outgoing(lam: complex, a: np.ndarray) -> np.ndarray:
    """Mean of (e^{i lam r} - 1)/(4 pi r) over the ball of radius a about its centre.

    With z = i lam a this is 3/(4 pi a) * [(e^z (z - 1) + 1)/z^2 - 1/2]
    = 3/(4 pi a) * sum_{n>=1} z^n / (n! (n + 2)); the series is used for small |z|.
    """
    a = np.asarray(a, dtype=float)
    z = 1j * lam * a
    g = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 0.5
    zs = z[small]
    acc = np.zeros_like(zs)
    term = np.ones_like(zs)
    for n in range(1, 20):
        term = term * zs / n
        acc = acc + term / (n + 2)
    g[small] = acc
    zb = z[~small]
    g[~small] = (np.exp(zb) * (zb - 1.0) + 1.0) / zb**2 - 0.5
    return 3.0 * g / (FOUR_PI * a)


def _diag_weighted(lam: complex, grid: SpaceGrid, kind: str, rule: str) -> np.ndarray:
    """w_i * G_ii for the chosen diagonal rule."""
    if kind == "difference":
        return grid.weights * 2j * lam / FOUR_PI
    osc = grid.weights * _ball_mean_outgoing(lam, grid.cell_radius)
    if rule == "subtraction":
        return grid.newton_potential - grid.laplace_rowsums + osc
    return grid.weights * 3.0 / (2.0 * FOUR_PI * grid.cell_radius) + osc


def _assemble(V, grid, lam, kind, branch, diagonal, cover_tol, use_symmetry=True, values=None):
    if grid.dim != 3:
        raise ValueError("Birman-Schwinger assembly is implemented for d = 3")
    if V is not None and V.dim != 3:
        raise ValueError("potential dimension must be 3")
    lam = complex(lam)
    if values is None:
        values = np.asarray(V(grid.nodes), dtype=complex)
        _check_cover(V, grid, values, cover_tol)
    if diagonal == "auto":
        diagonal = "subtraction" if grid.newton_potential is not None else "cell_average"
    if diagonal == "subtraction" and grid.newton_potential is None:
        raise ValueError("singularity subtraction needs the grid's Newtonian potential")
    mod, root = sqrt_factors(values, branch)
    sw = np.sqrt(grid.weights)
    left = sw * mod
    right = sw * root
    dw = _diag_weighted(lam, grid, kind, diagonal)
    meta = {"kind": kind, "branch": branch, "diagonal": diagonal}
    x = grid.nodes
    if use_symmetry and _ring_constant(values, grid):
        n_az, n_r = grid.n_azimuth, grid.n_rings
        cols = np.arange(n_r) * n_az
        r = np.linalg.norm(x[:, None, :] - x[None, cols, :], axis=-1)
        G = _kernel(lam, r, kind)
        G[cols, np.arange(n_r)] = 0.0
        col = left[:, None] * G * right[None, cols]
        col[cols, np.arange(n_r)] = mod[cols] * root[cols] * dw[cols]
        blocks = np.fft.fft(col.reshape(n_r, n_az, n_r), axis=1).transpose(1, 0, 2)
        return BSMatrix(lam=lam, grid=grid, potential=V, blocks=np.ascontiguousarray(blocks), meta=meta)
    n = grid.size
    M = np.empty((n, n), dtype=complex)
    for s in range(0, n, 512):
        rows = slice(s, min(s + 512, n))
        r = np.linalg.norm(x[rows, None, :] - x[None, :, :], axis=-1)
        G = _kernel(lam, r, kind)
        idx = np.arange(rows.stop - rows.start)
        G[idx, s + idx] = 0.0
        M[rows] = left[rows, None] * G * right[None, :]
    M[np.arange(n), np.arange(n)] = mod * root * dw
    return BSMatrix(lam=lam, grid=grid, potential=V, entries=M, meta=meta)


def assemble_bs(
    V: Potential,
    grid: SpaceGrid,
    lam: complex,
    branch: str = "principal",
    diagonal: str = "auto",
    cover_tol: float = 1e-6,
    use_symmetry: bool = True,
) -> BSMatrix:
    """Discretize BS(lam) on ``grid``; ``diagonal`` is auto, subtraction or cell_average."""
    return _assemble(V, grid, lam, "resolvent", branch, diagonal, cover_tol, use_symmetry)


def bs_difference(
    V: Potential,
    grid: SpaceGrid,
    lam: complex,
    branch: str = "principal",
    cover_tol: float = 1e-6,
    use_symmetry: bool = True,
) -> BSMatrix:
    """BS(lam) - BS(-lam) from the entire kernel 2i sin(lam r)/(4 pi r)."""
    return _assemble(V, grid, lam, "difference", branch, "auto", cover_tol, use_symmetry)


def stone_factorized(V: Potential, grid: SpaceGrid, lam: complex, rule, branch: str = "principal") -> np.ndarray:
    """a3 lam (|V|^{1/2} E(lam)) (E(conj lam)^* V^{1/2}) by sphere quadrature."""
    from .kernels import A3

    values = np.asarray(V(grid.nodes), dtype=complex)
    mod, root = sqrt_factors(values, branch)
    sw = np.sqrt(grid.weights)
    so = np.sqrt(rule.weights)
    phase = np.exp(1j * lam * (grid.nodes @ rule.nodes.T))  # e^{i lam x.xi}
    P = (sw * mod)[:, None] * phase * so[None, :]
    Q = so[:, None] * np.exp(-1j * lam * (rule.nodes @ grid.nodes.T)) * (sw * root)[None, :]
    return A3.a_d * lam * (P @ Q)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SingularSpectrum:
    values: np.ndarray
    lam: complex = 0j
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("singular values must be nonnegative and nonincreasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["k", "s_k"])
        for k, s in enumerate(self.values, start=1):
            w.writerow([k, repr(float(s))])
        return buf.getvalue()


def singular_values(M) -> SingularSpectrum:
    """Full descending singular spectrum of a BSMatrix or plain matrix."""
    if isinstance(M, BSMatrix):
        return SingularSpectrum(M.singular_values, M.lam, dict(M.meta, size=M.size))
    A = np.asarray(M)
    if not np.all(np.isfinite(A)):
        raise FloatingPointError("non-finite matrix entries")
    return SingularSpectrum(np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0))


def schatten_norm(S: SingularSpectrum, p: float) -> float:
    if p <= 0:
        raise ValueError("p must be positive")
    return float(np.sum(np.asarray(S.values) ** p) ** (1.0 / p))


def weak_schatten_norm(S: SingularSpectrum, p: float) -> float:
    """sup_N N^{1/p - 1} sum_{k <= N} s_k (an equivalent norm for p > 1)."""
    if p <= 1:
        raise ValueError("the partial-sum form of the weak Schatten norm needs p > 1")
    s = np.asarray(S.values, dtype=float)
    if s.size == 0:
        return 0.0
    N = np.arange(1, s.size + 1)
    return float(np.max(N ** (1.0 / p - 1.0) * np.cumsum(s)))


@dataclass(frozen=True)
class DecayFit:
    model: str
    slope: float
    prefactor: float
    r2: float
    n_used: int


def fit_decay(S: SingularSpectrum, model: str = "power", k_min: int = 1, k_max: Optional[int] = None) -> DecayFit:
    """Least-squares fit of log s_k against log k (power) or sqrt(k) (stretched_exp)."""
    s = np.asarray(S.values, dtype=float)
    k = np.arange(1, s.size + 1)
    sel = (k >= k_min) & (s > 1e3 * np.finfo(float).eps * (s[0] if s.size else 0.0))
    if k_max is not None:
        sel &= k <= k_max
    if sel.sum() < 10:
        raise ValueError("insufficient dynamic range: fewer than 10 usable singular values")
    if model == "power":
        t = np.log(k[sel])
    elif model == "stretched_exp":
        t = np.sqrt(k[sel])
    else:
        raise ValueError("model must be 'power' or 'stretched_exp'")
    y = np.log(s[sel])
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return DecayFit(model, float(slope), float(np.exp(icpt)), float(r2), int(sel.sum()))


def dump_matrix(M: BSMatrix, path) -> None:
    """Row-major little-endian (re, im) float64 pairs."""
    np.ascontiguousarray(M.dense, dtype="<c16").tofile(path)


def load_matrix(path, n: int) -> np.ndarray:
    return np.fromfile(path, dtype="<c16").reshape(n, n)
