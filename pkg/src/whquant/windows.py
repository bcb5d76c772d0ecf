"""Apodization windows Pi(q, p) and their closed-form transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Grid1D, PhaseGrid, fourier1
from .errors import InvalidWindow, NormError

__all__ = [
    "UnitWindow",
    "BornJordanWindow",
    "GaussianWindow",
    "SqueezedWindow",
    "separable_gaussian",
    "coherent_window",
    "thermal_window",
    "pi_eval",
    "fs_autocorr_closed",
    "squeezed_to_gaussian",
    "pi_from_state",
    "is_separable",
]

BJ_SERIES_CUTOFF = 1e-4


def _check_hbar(hbar):
    if not (hbar > 0 and math.isfinite(hbar)):
        raise InvalidWindow(f"hbar must be positive and finite, got {hbar!r}")


@dataclass(frozen=True)
class UnitWindow:
    """Pi = 1: no regularization (Weyl-Wigner)."""

    hbar: float = 1.0

    def __post_init__(self):
        _check_hbar(self.hbar)

    def pi(self, q, p):
        return np.ones(np.broadcast(q, p).shape) if np.ndim(q) or np.ndim(p) else 1.0


@dataclass(frozen=True)
class BornJordanWindow:
    """Pi = hbar sin(qp/hbar) / (qp)."""

    hbar: float = 1.0

    def __post_init__(self):
        _check_hbar(self.hbar)

    def pi(self, q, p):
        u = np.asarray(q, dtype=float) * np.asarray(p, dtype=float) / self.hbar
        small = np.abs(u) < BJ_SERIES_CUTOFF
        safe = np.where(small, 1.0, u)
        u2 = u * u
        out = np.where(small, 1.0 - u2 / 6.0 + u2 * u2 / 120.0, np.sin(safe) / safe)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class GaussianWindow:
    """Pi = exp(-q^2/2 sigma_l^2 - p^2/2 sigma_p^2 + gamma q p / 2).

    ``sigma_l`` is a length, ``sigma_p`` a momentum and ``gamma`` an inverse
    action.  The coupling must satisfy ``sigma_l sigma_p |gamma| < 2``.
    """

    sigma_l: float
    sigma_p: float
    gamma: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        _check_hbar(self.hbar)
        for name in ("sigma_l", "sigma_p"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidWindow(f"{name} must be positive and finite, got {v!r}")
        if not math.isfinite(self.gamma):
            raise InvalidWindow("gamma must be finite")
        if not self.lam2 > 0:
            raise InvalidWindow(
                f"coupling gamma={self.gamma} too large: need |gamma| < "
                f"{2.0 / (self.sigma_l * self.sigma_p):.6g}"
            )

    @property
    def lam2(self) -> float:
        s = self.sigma_l * self.sigma_p * self.gamma
        return (4.0 - s * s) / 4.0

    @property
    def lam(self) -> float:
        return math.sqrt(self.lam2)

    @property
    def lam_l2(self) -> float:
        return self.sigma_p**2 / self.lam2

    @property
    def lam_p2(self) -> float:
        return self.sigma_l**2 / self.lam2

    @property
    def lam0(self) -> float:
        return self.sigma_l**2 * self.sigma_p**2 * self.gamma / (4.0 * self.lam2)

    @property
    def separable(self) -> bool:
        return self.gamma == 0.0

    def pi(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.exp(-q * q / (2 * self.sigma_l**2) - p * p / (2 * self.sigma_p**2)
                     + 0.5 * self.gamma * q * p)
        return out if out.ndim else float(out)

    def lam_factor(self, q, deriv: int = 0):
        """q-factor of a separable window and its derivatives."""
        q = np.asarray(q, dtype=float)
        s2 = self.sigma_l**2
        g = np.exp(-q * q / (2 * s2))
        if deriv == 0:
            return g
        if deriv == 1:
            return -q / s2 * g
        if deriv == 2:
            return (q * q / s2 - 1.0) / s2 * g
        raise ValueError("deriv must be 0, 1 or 2")

    def mu_factor(self, p):
        p = np.asarray(p, dtype=float)
        return np.exp(-p * p / (2 * self.sigma_p**2))


def separable_gaussian(sigma_l: float, sigma_p: float, hbar: float = 1.0) -> GaussianWindow:
    return GaussianWindow(sigma_l, sigma_p, 0.0, hbar)


def coherent_window(ell: float = 1.0, hbar: float = 1.0) -> GaussianWindow:
    """Window of coherent-state (anti-Wick) quantization at length scale ``ell``."""
    return GaussianWindow(math.sqrt(2) * ell, math.sqrt(2) * hbar / ell, 0.0, hbar)


def thermal_window(sigma: float, hbar: float = 1.0) -> GaussianWindow:
    """Isotropic separable Gaussian, sigma_l = sigma_p = sigma."""
    return GaussianWindow(sigma, sigma, 0.0, hbar)


@dataclass(frozen=True)
class SqueezedWindow:
    """Window of the squeezed vacuum with length scale ``ell`` and parameter ``eta``."""

    ell: float
    eta: complex = 0j
    hbar: float = 1.0

    def __post_init__(self):
        _check_hbar(self.hbar)
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise InvalidWindow(f"ell must be positive, got {self.ell!r}")
        if not abs(self.eta) < 1:
            raise InvalidWindow(f"need |eta| < 1, got {self.eta!r}")
        object.__setattr__(self, "eta", complex(self.eta))

    @property
    def wp(self) -> float:
        return self.hbar / self.ell

    @property
    def kappa(self) -> complex:
        return (1 + self.eta) / (1 - self.eta)

    @property
    def kappa_r(self) -> float:
        return self.kappa.real

    @property
    def kappa_i(self) -> float:
        return self.kappa.imag

    def pi(self, q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        kr, ki = self.kappa_r, self.kappa_i
        out = np.exp(
            -q * q / (4 * self.ell**2) * (kr + ki * ki / kr)
            - p * p / (4 * self.wp**2 * kr)
            - (ki / kr) * q * p / (2 * self.hbar)
        )
        return out if out.ndim else float(out)

    def wavefunction(self, x):
        """Position-space squeezed vacuum, normalized on the real line."""
        x = np.asarray(x, dtype=float)
        eta = self.eta
        norm = ((1 - abs(eta) ** 2) / (math.pi * self.ell**2 * (1 - eta) ** 2)) ** 0.25
        return norm * np.exp(-x * x / (2 * self.ell**2) * self.kappa)


def is_separable(w) -> bool:
    if isinstance(w, GaussianWindow):
        return w.separable
    if isinstance(w, SqueezedWindow):
        return w.kappa_i == 0.0
    return isinstance(w, UnitWindow)


def pi_eval(w, q, p):
    """Evaluate Pi(q, p) for any supported window."""
    if not hasattr(w, "pi"):
        raise InvalidWindow(f"unsupported window {w!r}")
    return w.pi(q, p)


def fs_autocorr_closed(w: GaussianWindow):
    """Closure for the symplectic transform of Pi(q,p) Pi(-q,-p)."""
    if not isinstance(w, GaussianWindow):
        raise InvalidWindow("closed-form autocorrelation needs a GaussianWindow")
    h = w.hbar
    pref = w.sigma_l * w.sigma_p / (2 * w.lam * h)
    al = w.lam_l2 / (4 * h * h)
    ap = w.lam_p2 / (4 * h * h)
    a0 = w.lam0 / (h * h)

    def kernel(q, p):
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        out = pref * np.exp(-al * q * q - ap * p * p + a0 * q * p)
        return out if out.ndim else float(out)

    return kernel


def squeezed_to_gaussian(s: SqueezedWindow) -> GaussianWindow:
    """Gaussian window with the same Pi as the squeezed window ``s``."""
    k = s.kappa
    sl2 = 2 * s.ell**2 * s.kappa_r / abs(k) ** 2
    sp2 = 2 * s.wp**2 * s.kappa_r
    gamma = -s.kappa_i / (s.kappa_r * s.hbar)
    return GaussianWindow(math.sqrt(sl2), math.sqrt(sp2), gamma, s.hbar)


def pi_from_state(psi, grid: Grid1D, hbar: float = 1.0, *, imag_tol: float = 1e-8):
    """Window of the pure state ``psi``: Pi(q, p) = <psi| U(-q,-p) |psi>.

    Returns ``(values, PhaseGrid)``.  The q-axis holds the integer grid
    shifts of ``grid`` and the p-axis is its dual.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (grid.n,):
        raise NormError("state does not match its grid")
    norm = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    if abs(norm - 1.0) > 1e-8:
        raise NormError(f"state norm {norm:.12g} differs from 1")
    n = grid.n
    shifts = np.arange(n) - n // 2
    idx = np.arange(n)[None, :] + shifts[:, None]
    valid = (idx >= 0) & (idx < n)
    shifted = np.where(valid, psi[np.clip(idx, 0, n - 1)], 0.0)
    g = np.conj(psi)[None, :] * shifted
    pgrid = grid.dual(hbar)
    qgrid = Grid1D.centered(n, grid.dx)
    values = fourier1(g, grid, hbar, out_grid=pgrid, axis=1) * math.sqrt(2 * math.pi * hbar)
    q = qgrid.points[:, None]
    p = pgrid.points[None, :]
    values = values * np.exp(-1j * q * p / (2 * hbar))
    peak = np.max(np.abs(values))
    if np.max(np.abs(values.imag)) < imag_tol * max(peak, 1.0):
        values = values.real
    return values, PhaseGrid(qgrid, pgrid, hbar)
