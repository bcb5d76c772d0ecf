"""Regularized quantum operators on a position grid.

Operators act on samples psi(x_j) of a Grid1D with Dirichlet truncation at the
grid ends.  P is the central first difference and P^2 the three-point second
difference, both scaled by hbar.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Grid1D, convolve1, fourier1
from .errors import AsymmetryWarning, GridError, InvalidWindow, OrderError
from .portrait import Interval, PortraitContext, b_sigma, mass_terms
from .windows import BornJordanWindow, GaussianWindow, UnitWindow

__all__ = [
    "GridOperator",
    "position_operator",
    "momentum_operator",
    "momentum_squared",
    "quantum_v_eff",
    "build_hamiltonian",
    "window_operator",
    "quantize_potential",
    "quantize_momentum_fn",
    "quantize_L_pn",
    "spectrum",
    "coherent_state",
    "expectation",
]


@dataclass(frozen=True)
class GridOperator:
    """Dense matrix acting on samples over ``grid``.

    With ``hermitian=True`` (the default) the matrix is validated to be
    Hermitian to ``1e-12`` of its max-norm.
    """

    grid: Grid1D
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (self.grid.n, self.grid.n):
            raise GridError(f"matrix shape {m.shape} does not match grid size {self.grid.n}")
        if not np.all(np.isfinite(m)):
            raise GridError("operator has non-finite entries")
        if self.hermitian:
            scale = max(np.max(np.abs(m)), 1e-300)
            if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
                raise GridError("operator is not Hermitian")

    @property
    def is_diagonal(self) -> bool:
        m = self.matrix
        return bool(np.count_nonzero(m - np.diag(np.diag(m))) == 0)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def apply(self, psi) -> np.ndarray:
        return self.matrix @ np.asarray(psi)

    def hermiticity_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T)))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _diag_op(grid, values):
    return GridOperator(grid, np.diag(np.asarray(values)))


def position_operator(grid: Grid1D) -> GridOperator:
    return _diag_op(grid, grid.points.astype(float))


def _first_difference(grid: Grid1D) -> np.ndarray:
    n = grid.n
    d = np.zeros((n, n))
    i = np.arange(n - 1)
    d[i, i + 1] = 1.0
    d[i + 1, i] = -1.0
    return d / (2.0 * grid.dx)


def momentum_operator(grid: Grid1D, hbar: float = 1.0) -> GridOperator:
    """P = -i hbar d/dx by central differences (Hermitian)."""
    return GridOperator(grid, -1j * hbar * _first_difference(grid))


def momentum_squared(grid: Grid1D, hbar: float = 1.0) -> GridOperator:
    """P^2 by the three-point Laplacian (real symmetric)."""
    n = grid.n
    m = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    return GridOperator(grid, -(hbar / grid.dx) ** 2 * m)


def quantum_v_eff(ctx: PortraitContext, x, *, tail_scale: float = 1.0):
    """Quantum effective potential profile entering the grid Hamiltonian.

    ``tail_scale`` multiplies the Gaussian boundary-tail term.  The value 1
    keeps the stated prefactor hbar V0 / sqrt(2 pi sigma_p^2); the value 1/2
    is what an exact Gaussian smoothing of the truncated parabola yields.
    """
    m, w = ctx.model, ctx.window
    h = ctx.hbar
    x = np.asarray(x, dtype=float)
    W, W1, W2 = mass_terms(x, m.a, m.b, m.inv_mass_scale, h / w.sigma_p, order=2)
    ok = W > m.mass_floor
    Wc = np.where(ok, W, 0.0)
    chi = b_sigma(w.sigma_p / math.sqrt(2.0), m.interval, x, h)
    out = 0.5 * m.V0 * ((x - m.q0) ** 2 + h * h / w.sigma_p**2) * chi + h * h * Wc / w.sigma_l**2
    if w.gamma != 0.0:
        Ws = np.where(ok, W, 1.0)
        out = out + np.where(ok, 0.25 * h**4 * w.gamma**2 * (W2 - W1 * W1 / Ws), 0.0)
    r = w.sigma_p**2 / (2 * h * h)
    tail = (x + m.b - 2 * m.q0) * np.exp(-r * (x - m.b) ** 2) - (x + m.a - 2 * m.q0) * np.exp(-r * (x - m.a) ** 2)
    out = out - tail_scale * m.V0 * h / math.sqrt(2 * math.pi * w.sigma_p**2) * tail
    return out if out.ndim else float(out)


def build_hamiltonian(ctx: PortraitContext, grid: Grid1D, *, tail_scale: float = 1.0) -> GridOperator:
    """Grid Hamiltonian 1/2 {W/2, (P - A)^2} + V_eff with W the quantum inverse mass.

    A = -(hbar^2 gamma / 2) W'/W.  Below the mass floor W, A and the
    gamma-dependent potential are set to zero, so the kinetic term vanishes
    outside the walls.  The result is real symmetric for gamma = 0 and
    complex Hermitian otherwise.
    """
    m, w = ctx.model, ctx.window
    h = ctx.hbar
    margin = 4 * h / w.sigma_p
    if grid.n < 64:
        raise GridError("grid Hamiltonian needs n >= 64")
    if grid.x0 > m.a - margin or grid.x1 < m.b + margin:
        raise GridError(f"grid must span [{m.a - margin:.6g}, {m.b + margin:.6g}]")
    x = grid.points
    W, W1 = mass_terms(x, m.a, m.b, m.inv_mass_scale, h / w.sigma_p, order=1)
    ok = W > m.mass_floor
    Wc = np.where(ok, W, 0.0)
    K = momentum_squared(grid, h).matrix
    if w.gamma != 0.0:
        A = np.where(ok, -0.5 * h * h * w.gamma * W1 / np.where(ok, W, 1.0), 0.0)
        P = momentum_operator(grid, h).matrix
        PA = P * A[None, :]
        K = K - PA - PA.conj().T + np.diag(A * A)
    WK = Wc[:, None] * K
    H = 0.25 * (WK + WK.conj().T) + np.diag(quantum_v_eff(ctx, x, tail_scale=tail_scale))
    H = 0.5 * (H + H.conj().T)
    return GridOperator(grid, H)


def _mu_of(w):
    if isinstance(w, (UnitWindow, BornJordanWindow)):
        return None
    if isinstance(w, GaussianWindow):
        return w.mu_factor if w.separable else (lambda p: w.pi(0.0, p))
    if hasattr(w, "pi"):
        return lambda p: w.pi(0.0, p)
    raise InvalidWindow(f"unsupported window {w!r}")


def _sample(profile, grid):
    if callable(profile):
        return np.asarray(profile(grid.points), dtype=float)
    v = np.asarray(profile, dtype=float)
    if v.shape != (grid.n,):
        raise GridError("profile does not match grid")
    return v


def _smooth_q(values, grid: Grid1D, w) -> np.ndarray:
    """(2 pi hbar)^(-1/2) V * conj-F[Pi(0, .)] sampled on ``grid``."""
    mu = _mu_of(w)
    if mu is None:
        return values.copy()
    kgrid = grid.offsets()
    dual = kgrid.dual(w.hbar)
    ker = fourier1(mu(dual.points), dual, w.hbar, inverse=True, out_grid=kgrid)
    ker = ker.real / math.sqrt(2 * math.pi * w.hbar)
    return convolve1(ker, values, grid, kernel_grid=kgrid)


def quantize_potential(V, w, grid: Grid1D) -> GridOperator:
    """Multiplication operator of the quantized potential V(q)."""
    return _diag_op(grid, _smooth_q(_sample(V, grid), grid, w))


def window_operator(w, iv: Interval, grid: Grid1D) -> GridOperator:
    """Multiplication operator quantizing the indicator of ``iv``."""
    if isinstance(w, GaussianWindow) and not w.separable:
        raise InvalidWindow("window operator needs a separable window")
    return quantize_potential(iv.indicator, w, grid)


def quantize_momentum_fn(v, w, grid: Grid1D) -> GridOperator:
    """Operator of a function v(p), diagonal in the discrete Fourier basis.

    ``v`` must be a vectorized callable.  Its smoothing by the transform of
    Pi(., 0) is evaluated by direct summation at each grid frequency.
    """
    h = w.hbar
    n = grid.n
    k = 2 * math.pi * h * np.fft.fftfreq(n, d=grid.dx)
    if isinstance(w, (UnitWindow, BornJordanWindow)):
        vk = np.asarray(v(k), dtype=float)
    else:
        if isinstance(w, GaussianWindow) and w.separable:
            lam = w.lam_factor
        else:
            lam = lambda q: w.pi(q, 0.0)  # noqa: E731
        qg = Grid1D.centered(n, grid.dx)
        kg = qg.dual(h)
        ker = fourier1(lam(qg.points), qg, h, out_grid=kg).real / math.sqrt(2 * math.pi * h)
        kk = kg.points
        vk = (np.asarray(v(k[:, None] - kk[None, :])) * ker[None, :]).sum(axis=1) * kg.dx
    F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    mat = F.conj().T @ (vk[:, None] * F)
    return GridOperator(grid, 0.5 * (mat + mat.conj().T))


def _lambda_derivs(w):
    if isinstance(w, (UnitWindow, BornJordanWindow)):
        return 1.0, 0.0, 0.0
    if isinstance(w, GaussianWindow):
        if not w.separable:
            raise InvalidWindow("quantize_L_pn needs a separable window")
        return tuple(float(w.lam_factor(0.0, d)) for d in range(3))
    raise InvalidWindow(f"unsupported window {w!r}")


def quantize_L_pn(L, n: int, w, grid: Grid1D) -> GridOperator:
    """Quantization of L(q) p^n for n in {0, 1, 2} under a separable window."""
    if n not in (0, 1, 2):
        raise OrderError(f"only n <= 2 is supported, got n={n!r}")
    l0, l1, l2 = _lambda_derivs(w)
    if l1 != 0.0:
        warnings.warn("window has lambda'(0) != 0; operator is not symmetric", AsymmetryWarning, stacklevel=2)
    h = w.hbar
    T = _smooth_q(_sample(L, grid), grid, w)
    if n == 0:
        return _diag_op(grid, l0 * T)
    D = np.diag(T)
    P = momentum_operator(grid, h).matrix
    if n == 1:
        mat = 0.5 * l0 * (D @ P + P @ D) + 1j * h * l1 * D
    else:
        dx = grid.dx
        T1 = np.gradient(T, dx)
        T2 = np.zeros_like(T)
        T2[1:-1] = (T[2:] - 2 * T[1:-1] + T[:-2]) / dx**2
        P2 = momentum_squared(grid, h).matrix
        mat = 0.5 * l0 * (D @ P2 + P2 @ D) + 2j * h * l1 * (D @ P)
        mat = mat + h * h * np.diag(-l2 * T + l1 * T1 + 0.25 * l0 * T2)
    symmetric = l1 == 0.0
    if symmetric:
        mat = 0.5 * (mat + mat.conj().T)
        if np.all(np.isreal(mat)):
            mat = mat.real
    return GridOperator(grid, mat, hermitian=symmetric)


def spectrum(op: GridOperator, iv: Interval | None = None, *, n_states: int | None = None,
             min_weight: float = 0.5):
    """Eigenvalues and eigenvectors in ascending order.

    With ``iv`` given, only states carrying at least ``min_weight`` of their
    norm inside the interval are kept.  Exterior nodes where the kinetic term
    has been switched off carry near-zero eigenvalues that do not belong to
    the confined spectrum, and this filter removes them.
    """
    vals, vecs = np.linalg.eigh(op.matrix)
    if iv is not None:
        x = op.grid.points
        inside = (x >= iv.a) & (x <= iv.b)
        weight = np.sum(np.abs(vecs[inside, :]) ** 2, axis=0)
        keep = weight >= min_weight
        vals, vecs = vals[keep], vecs[:, keep]
    if n_states is not None:
        vals, vecs = vals[:n_states], vecs[:, :n_states]
    return vals, vecs


def coherent_state(grid: Grid1D, q: float, p: float, ell: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Grid samples of the coherent state centred at (q, p), normalized on the grid."""
    x = grid.points
    psi = np.exp(-((x - q) ** 2) / (2 * ell * ell) + 1j * p * x / hbar)
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def expectation(op: GridOperator, psi) -> float:
    psi = np.asarray(psi)
    return float(np.real(np.vdot(psi, op.matrix @ psi)) * op.grid.dx)
