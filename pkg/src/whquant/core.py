"""Numerical substrate: grids, special functions, Fourier transforms, convolutions.

Conventions (hbar explicit everywhere):

* symplectic Fourier transform
  ``Fs[f](q, p) = sum exp(-i (q p' - p q') / hbar) f(q', p') dq' dp' / (2 pi hbar)``
* 1-D Fourier transform
  ``F[f](k) = (2 pi hbar)^(-1/2) sum f(x) exp(-i k x / hbar) dx``

Transforms are evaluated as exact DFTs of the Riemann sums, so for a grid
whose spacings satisfy ``dq * dp = 2 pi hbar / n`` (see
:meth:`PhaseGrid.self_dual`) the symplectic transform maps the grid onto
itself and is an exact involution up to rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.special
from scipy.signal import fftconvolve

from .errors import DomainError, EdgeLeakage, GridError

__all__ = [
    "Grid1D",
    "PhaseGrid",
    "erfc",
    "pochhammer",
    "gauss_2f1",
    "sympl_ft",
    "sympl_ft_reflected",
    "parity",
    "convolve2",
    "fourier1",
    "convolve1",
    "check_edges",
]

EDGE_RTOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x0 + j*dx`` for ``j = 0..n-1``."""

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if not (self.n >= 2 and int(self.n) == self.n):
            raise GridError(f"grid needs an integer n >= 2, got {self.n!r}")
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise GridError(f"grid spacing must be positive, got {self.dx!r}")
        if not math.isfinite(self.x0):
            raise GridError("grid origin must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def centered(cls, n: int, dx: float) -> Grid1D:
        """Grid with ``x = 0`` at index ``n // 2``."""
        return cls(-(n // 2) * dx, dx, n)

    @classmethod
    def spanning(cls, lo: float, hi: float, n: int) -> Grid1D:
        """Grid with ``n`` nodes from ``lo`` to ``hi`` inclusive."""
        if not hi > lo:
            raise GridError("need hi > lo")
        return cls(lo, (hi - lo) / (n - 1), n)

    @property
    def points(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x1(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    @property
    def is_centered(self) -> bool:
        return abs(self.x0 + (self.n // 2) * self.dx) <= 1e-12 * self.dx * self.n

    def dual(self, hbar: float = 1.0) -> Grid1D:
        """Centered conjugate grid with spacing ``2 pi hbar / (n dx)``."""
        return Grid1D.centered(self.n, 2.0 * math.pi * hbar / (self.n * self.dx))

    def offsets(self) -> Grid1D:
        """Centered grid of all pairwise differences ``x_j - x_k``."""
        return Grid1D.centered(2 * self.n - 1, self.dx)


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid on phase space; arrays are indexed ``[i_q, j_p]``."""

    qgrid: Grid1D
    pgrid: Grid1D
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise GridError(f"hbar must be positive, got {self.hbar!r}")

    @classmethod
    def self_dual(cls, n: int, hbar: float = 1.0, aspect: float = 1.0) -> PhaseGrid:
        """Centered ``n x n`` grid mapped onto itself by :func:`sympl_ft`.

        ``aspect`` is the ratio ``dq / dp``.
        """
        cell = 2.0 * math.pi * hbar / n
        dq = math.sqrt(cell * aspect)
        return cls(Grid1D.centered(n, dq), Grid1D.centered(n, cell / dq), hbar)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.qgrid.n, self.pgrid.n)

    @property
    def cell(self) -> float:
        """Phase-space measure of one node, ``dq dp / (2 pi hbar)``."""
        return self.qgrid.dx * self.pgrid.dx / (2.0 * math.pi * self.hbar)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.qgrid.points, self.pgrid.points, indexing="ij")

    def dual(self) -> PhaseGrid:
        """Output grid of the symplectic transform (q from p', p from q')."""
        return PhaseGrid(self.pgrid.dual(self.hbar), self.qgrid.dual(self.hbar), self.hbar)

    def offsets(self) -> PhaseGrid:
        return PhaseGrid(self.qgrid.offsets(), self.pgrid.offsets(), self.hbar)


# -- special functions -------------------------------------------------------


def erfc(x):
    """Complementary error function for scalars or arrays."""
    if isinstance(x, (float, int)) and not isinstance(x, bool):
        return math.erfc(x)
    if np.ndim(x) == 0:
        return float(scipy.special.erfc(float(x)))
    return scipy.special.erfc(np.asarray(x, dtype=float))


def pochhammer(a: float, s: int) -> float:
    """Rising factorial ``a (a+1) ... (a+s-1)``; equal to 1 for ``s = 0``."""
    if s < 0 or int(s) != s:
        raise DomainError(f"Pochhammer index must be a non-negative integer, got {s!r}")
    out = 1.0
    for k in range(int(s)):
        out *= a + k
    return out


def gauss_2f1(a, b, c, x, *, rtol=1e-12, max_terms=500, full_output=False):
    """Gauss hypergeometric function by direct summation of its series.

    Stops once a term drops below ``rtol`` times the running sum, or after
    ``max_terms`` terms.  With ``full_output=True`` returns
    ``(value, achieved_rtol, n_terms)``.
    """
    if not abs(x) < 1.0:
        raise DomainError(f"2F1 series needs |x| < 1, got x={x!r}")
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"2F1 undefined for non-positive integer c={c!r}")
    total = 1.0
    term = 1.0
    achieved = 0.0
    n_terms = 1
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x
        total += term
        n_terms += 1
        achieved = abs(term) / abs(total) if total != 0.0 else abs(term)
        if achieved <= rtol:
            break
    if full_output:
        return total, achieved, n_terms
    return total


# -- transforms ---------------------------------------------------------------


def check_edges(f, rtol: float = EDGE_RTOL) -> bool:
    """Warn with :class:`EdgeLeakage` if ``f`` is not negligible on its boundary.

    Returns True when the field is clean.
    """
    f = np.abs(np.asarray(f))
    peak = f.max() if f.size else 0.0
    if peak == 0.0:
        return True
    edges = [f[0], f[-1]] if f.ndim == 1 else [f[0, :], f[-1, :], f[:, 0], f[:, -1]]
    edge = max(float(np.max(e)) for e in edges)
    if edge > rtol * peak:
        warnings.warn(
            f"field boundary magnitude {edge:.3g} exceeds {rtol:g} of peak {peak:.3g}",
            EdgeLeakage,
            stacklevel=3,
        )
        return False
    return True


def _dft(x, axis, sign):
    # sum_j x_j exp(sign * 2 pi i j m / n)
    if sign < 0:
        return np.fft.fft(x, axis=axis)
    return x.shape[axis] * np.fft.ifft(x, axis=axis)


def _check_conjugate(grid: Grid1D, out: Grid1D, hbar: float):
    if out.n != grid.n or not math.isclose(out.dx * grid.dx * grid.n, 2 * math.pi * hbar, rel_tol=1e-10):
        raise GridError("output grid is not conjugate to the input grid")


def _sft(f, grid: PhaseGrid, sign: int, out_grid: PhaseGrid | None):
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise GridError(f"field shape {f.shape} does not match grid {grid.shape}")
    out_grid = grid.dual() if out_grid is None else out_grid
    h = grid.hbar
    if out_grid.hbar != h:
        raise GridError("hbar mismatch between input and output grids")
    qg, pg = grid.qgrid, grid.pgrid
    Qg, Pg = out_grid.qgrid, out_grid.pgrid
    _check_conjugate(pg, Qg, h)
    _check_conjugate(qg, Pg, h)
    check_edges(f)

    j = np.arange(qg.n)
    k = np.arange(pg.n)
    g = f * np.exp(sign * 1j * Qg.x0 * pg.dx * k / h)[None, :]
    g = g * np.exp(-sign * 1j * Pg.x0 * qg.dx * j / h)[:, None]
    g = _dft(g, axis=1, sign=sign)
    g = _dft(g, axis=0, sign=-sign)
    out = g.T
    m = np.arange(Qg.n)
    ell = np.arange(Pg.n)
    out = out * np.exp(sign * 1j * Qg.dx * pg.x0 * m / h)[:, None]
    out = out * np.exp(-sign * 1j * Pg.dx * qg.x0 * ell / h)[None, :]
    phase = np.exp(sign * 1j * (Qg.x0 * pg.x0 - Pg.x0 * qg.x0) / h)
    return out * (phase * grid.cell)


def sympl_ft(f, grid: PhaseGrid, out_grid: PhaseGrid | None = None) -> np.ndarray:
    """Symplectic Fourier transform of a field sampled on ``grid``.

    The result lives on ``out_grid`` (default ``grid.dual()``), whose q-axis
    is conjugate to the input p-axis and vice versa.  Always complex.
    """
    return _sft(f, grid, -1, out_grid)


def sympl_ft_reflected(f, grid: PhaseGrid, out_grid: PhaseGrid | None = None) -> np.ndarray:
    """Dual transform ``Fs[f](-q, -p)``, evaluated with the conjugate kernel."""
    return _sft(f, grid, +1, out_grid)


def parity(f, grid: PhaseGrid | Grid1D) -> np.ndarray:
    """Reflect a field through the origin of a centered grid.

    For even ``n`` the most negative node maps onto itself (periodic image),
    which is what the DFT composition of the two symplectic transforms does.
    """
    axes = (grid,) if isinstance(grid, Grid1D) else (grid.qgrid, grid.pgrid)
    out = np.asarray(f)
    for axis, g in enumerate(axes):
        if not g.is_centered:
            raise GridError("parity needs grids centered on the origin")
        idx = (2 * (g.n // 2) - np.arange(g.n)) % g.n
        out = np.take(out, idx, axis=axis)
    return out


def _offset(kernel_grid: Grid1D, grid: Grid1D) -> int:
    if not math.isclose(kernel_grid.dx, grid.dx, rel_tol=1e-12):
        raise GridError("convolution operands need equal spacing")
    o = -kernel_grid.x0 / kernel_grid.dx
    if abs(o - round(o)) > 1e-8 or not 0 <= round(o) < kernel_grid.n:
        raise GridError("kernel grid must contain the origin as a node")
    return int(round(o))


def _convolve(kernel, f, kgrids, grids):
    kernel = np.asarray(kernel)
    f = np.asarray(f)
    full = fftconvolve(kernel, f, mode="full")
    sl = []
    for kg, g in zip(kgrids, grids):
        o = _offset(kg, g)
        sl.append(slice(o, o + g.n))
    weight = math.prod(g.dx for g in grids)
    return full[tuple(sl)] * weight


def convolve2(f, g, grid: PhaseGrid, kernel_grid: PhaseGrid | None = None) -> np.ndarray:
    """Linear convolution ``(f * g)(q, p) = int f(q-q', p-p') g(q', p') dq' dp'``.

    ``g`` is sampled on ``grid`` and so is the result.  ``f`` is sampled on
    ``kernel_grid`` (default ``grid``), which must contain the origin as a
    node and share the spacings of ``grid``.
    """
    kernel_grid = grid if kernel_grid is None else kernel_grid
    if np.shape(f) != kernel_grid.shape or np.shape(g) != grid.shape:
        raise GridError("field shapes do not match their grids")
    return _convolve(f, g, (kernel_grid.qgrid, kernel_grid.pgrid), (grid.qgrid, grid.pgrid))


def convolve1(f, g, grid: Grid1D, kernel_grid: Grid1D | None = None) -> np.ndarray:
    """1-D analogue of :func:`convolve2`."""
    kernel_grid = grid if kernel_grid is None else kernel_grid
    if np.shape(f) != (kernel_grid.n,) or np.shape(g) != (grid.n,):
        raise GridError("field shapes do not match their grids")
    return _convolve(f, g, (kernel_grid,), (grid,))


def fourier1(f, grid: Grid1D, hbar: float = 1.0, *, inverse: bool = False,
             out_grid: Grid1D | None = None, axis: int = -1) -> np.ndarray:
    """Unitary 1-D Fourier transform (``inverse=True`` flips the kernel sign).

    The result lives on ``out_grid``, by default ``grid.dual(hbar)``.  Arrays
    with more than one dimension are transformed along ``axis``.
    """
    f = np.moveaxis(np.asarray(f), axis, -1)
    if f.shape[-1] != grid.n:
        raise GridError("field shape does not match grid")
    out_grid = grid.dual(hbar) if out_grid is None else out_grid
    _check_conjugate(grid, out_grid, hbar)
    s = 1 if inverse else -1
    j = np.arange(grid.n)
    m = np.arange(out_grid.n)
    g = f * np.exp(s * 1j * out_grid.x0 * grid.dx * j / hbar)
    g = _dft(g, axis=-1, sign=s)
    g = g * np.exp(s * 1j * (out_grid.dx * grid.x0 * m + out_grid.x0 * grid.x0) / hbar)
    g = g * (grid.dx / math.sqrt(2.0 * math.pi * hbar))
    return np.moveaxis(g, -1, axis)
