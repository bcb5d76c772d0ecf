"""Semi-classical portraits of observables truncated to an interval.

The model is the position-dependent-mass oscillator

    H(q, p) = chi(q) [ (q-a)(b-q) p^2 / (2 m0 L^2) + V0 (q-q0)^2 / 2 ]

with chi the indicator of (a, b).  Under a Gaussian window every portrait is a
Gaussian smoothing, so indicators become differences of erfc and the
truncated polynomials pick up Gaussian boundary tails.

Inverse masses are handled as the regular quantity ``M = 1/m``; divisions
by ``M`` are refused below :attr:`PdmOscillator.mass_floor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Grid1D, PhaseGrid, check_edges, convolve1, convolve2, erfc, fourier1
from .errors import DomainError, GridError, InvalidWindow, MassFloorError
from .windows import GaussianWindow, fs_autocorr_closed

__all__ = [
    "Interval",
    "PdmOscillator",
    "PortraitContext",
    "b_sigma",
    "chi_check",
    "chi_hat_profile",
    "mass_profile",
    "m_check",
    "m_hat_profile",
    "v_chi_check",
    "v_eff_check",
    "minimal_coupling",
    "h_check",
    "portrait_p2h",
    "portrait_numeric",
    "portrait_separable",
    "mass_terms",
    "parabola_terms",
]

SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    def indicator(self, x):
        """Sharp indicator with value 1/2 on the endpoints."""
        x = np.asarray(x, dtype=float)
        return np.where((x > self.a) & (x < self.b), 1.0, 0.0) + 0.5 * ((x == self.a) | (x == self.b))


@dataclass(frozen=True)
class PdmOscillator:
    """Oscillator with inverse mass (q-a)(b-q)/(m0 L^2) confined to ``interval``."""

    m0: float = 1.0
    L: float = 1.0
    V0: float = 0.0
    q0: float = 3.0
    interval: Interval = field(default_factory=lambda: Interval(1.0, 5.0))

    def __post_init__(self):
        if not (self.m0 > 0 and self.L > 0):
            raise DomainError("m0 and L must be positive")
        if not self.V0 >= 0:
            raise DomainError("V0 must be non-negative")
        if not math.isfinite(self.q0):
            raise DomainError("q0 must be finite")

    @property
    def a(self) -> float:
        return self.interval.a

    @property
    def b(self) -> float:
        return self.interval.b

    @property
    def inv_mass_scale(self) -> float:
        return 1.0 / (self.m0 * self.L**2)

    @property
    def mass_floor(self) -> float:
        return 1e-12 * self.interval.width**2 * self.inv_mass_scale / 4.0

    def inverse_mass(self, q):
        """Truncated classical inverse mass chi(q) (q-a)(b-q) / (m0 L^2)."""
        q = np.asarray(q, dtype=float)
        return self.interval.indicator(q) * (q - self.a) * (self.b - q) * self.inv_mass_scale

    def potential(self, q):
        """Truncated classical potential chi(q) V0 (q-q0)^2 / 2."""
        q = np.asarray(q, dtype=float)
        return self.interval.indicator(q) * 0.5 * self.V0 * (q - self.q0) ** 2

    def hamiltonian(self, q, p):
        return 0.5 * self.inverse_mass(q) * np.asarray(p) ** 2 + self.potential(q)


@dataclass(frozen=True)
class PortraitContext:
    model: PdmOscillator
    window: GaussianWindow

    def __post_init__(self):
        if not isinstance(self.window, GaussianWindow):
            raise InvalidWindow("portraits need a GaussianWindow")

    @property
    def hbar(self) -> float:
        return self.window.hbar

    @property
    def sigma_check(self) -> float:
        """Smoothing scale of the semi-classical mass term."""
        return self.window.sigma_p / math.sqrt(2.0)


# -- scalar/array kernels -----------------------------------------------------
# These take the elementary functions as arguments so that the same algebra
# serves numpy arrays and the math-module fast path used by the integrator.


def _np_exp(x):
    return np.exp(x)


def mass_terms(x, a, b, c, s, exp=_np_exp, erfc_=erfc, order=3):
    """Inverse mass smoothed by a normal kernel of std ``s`` and derivatives.

    Returns ``(M, M', M'', M''')`` truncated to ``order + 1`` entries.
    """
    r = 1.0 / (s * math.sqrt(2.0))
    B = 0.5 * (erfc_((x - b) * r) - erfc_((x - a) * r))
    ea = exp(-((x - a) * r) ** 2)
    eb = exp(-((x - b) * r) ** 2)
    k = s / SQRT2PI
    M = c * (((x - a) * (b - x) - s * s) * B + k * ((x - a) * eb - (x - b) * ea))
    out = [M]
    if order >= 1:
        out.append(c * ((a + b - 2 * x) * B - 2 * k * (ea - eb)))
    if order >= 2:
        ga = ea / (s * SQRT2PI)
        gb = eb / (s * SQRT2PI)
        out.append(c * (-2 * B + (b - a) * (ga + gb)))
        if order >= 3:
            dB = ga - gb
            s2 = s * s
            out.append(c * (-2 * dB - (b - a) * ((x - a) * ga + (x - b) * gb) / s2))
    return tuple(out)


def parabola_terms(x, a, b, q0, s, exp=_np_exp, erfc_=erfc):
    """Smoothed truncated parabola ``int_a^b (y-q0)^2 g_s(x-y) dy`` and its slope."""
    r = 1.0 / (s * math.sqrt(2.0))
    B = 0.5 * (erfc_((x - b) * r) - erfc_((x - a) * r))
    ga = exp(-((x - a) * r) ** 2) / (s * SQRT2PI)
    gb = exp(-((x - b) * r) ** 2) / (s * SQRT2PI)
    s2 = s * s
    T = ((x - q0) ** 2 + s2) * B - s2 * ((x + b - 2 * q0) * gb - (x + a - 2 * q0) * ga)
    dT = (a - q0) ** 2 * ga - (b - q0) ** 2 * gb + 2 * (x - q0) * B + 2 * s2 * (ga - gb)
    return T, dT


# -- profiles -------------------------------------------------------------------


def b_sigma(sigma: float, iv: Interval, x, hbar: float = 1.0):
    """Smoothed indicator 1/2 [erfc(sigma (x-b)/hbar) - erfc(sigma (x-a)/hbar)]."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    out = 0.5 * (erfc(sigma * (x - iv.b) / hbar) - erfc(sigma * (x - iv.a) / hbar))
    return out if np.ndim(out) else float(out)


def chi_check(ctx: PortraitContext, q):
    """Semi-classical portrait of the interval indicator."""
    return b_sigma(ctx.window.sigma_p / 2.0, ctx.model.interval, q, ctx.hbar)


def chi_hat_profile(ctx: PortraitContext, x):
    """Multiplication profile of the quantized indicator."""
    return b_sigma(ctx.window.sigma_p / math.sqrt(2.0), ctx.model.interval, x, ctx.hbar)


def mass_profile(sigma: float, model: PdmOscillator, x, hbar: float = 1.0, deriv: int = 0):
    """Smoothed inverse mass at momentum scale ``sigma`` (or its derivative)."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if deriv not in (0, 1, 2, 3):
        raise DomainError("deriv must be in 0..3")
    x = np.asarray(x, dtype=float)
    out = mass_terms(x, model.a, model.b, model.inv_mass_scale, hbar / sigma, order=deriv)[deriv]
    return out if out.ndim else float(out)


def m_check(ctx: PortraitContext, q, deriv: int = 0):
    """Inverse of the semi-classical mass (a regular function)."""
    return mass_profile(ctx.sigma_check, ctx.model, q, ctx.hbar, deriv)


def m_hat_profile(ctx: PortraitContext, x, deriv: int = 0):
    """Inverse of the quantum mass profile."""
    return mass_profile(ctx.window.sigma_p, ctx.model, x, ctx.hbar, deriv)


def v_chi_check(ctx: PortraitContext, q, deriv: int = 0):
    """Portrait of the truncated potential (value or slope)."""
    m = ctx.model
    s = math.sqrt(2.0) * ctx.hbar / ctx.window.sigma_p
    T, dT = parabola_terms(np.asarray(q, dtype=float), m.a, m.b, m.q0, s)
    out = 0.5 * m.V0 * (dT if deriv else T)
    return out if np.ndim(out) else float(out)


def _floor_check(ctx, M):
    if np.any(np.asarray(M) <= ctx.model.mass_floor):
        raise MassFloorError(
            f"inverse mass below floor {ctx.model.mass_floor:.3g}; point lies outside the confinement region"
        )


def _veff_parts(ctx, q, deriv):
    w = ctx.window
    h2 = ctx.hbar**2
    g = w.gamma
    M, M1, M2, M3 = mass_terms(np.asarray(q, dtype=float), ctx.model.a, ctx.model.b,
                               ctx.model.inv_mass_scale, ctx.hbar / ctx.sigma_check)
    if g != 0.0:
        _floor_check(ctx, M)
    if deriv == 0:
        extra = h2 * M / w.sigma_l**2
        if g != 0.0:
            extra = extra + 0.5 * h2 * h2 * g * g * (M2 - M1 * M1 / M)
        return v_chi_check(ctx, q) + extra
    extra = h2 * M1 / w.sigma_l**2
    if g != 0.0:
        extra = extra + 0.5 * h2 * h2 * g * g * (M3 - 2 * M1 * M2 / M + M1**3 / M**2)
    return v_chi_check(ctx, q, deriv=1) + extra


def v_eff_check(ctx: PortraitContext, q, deriv: int = 0):
    """Semi-classical effective potential (``deriv=1`` gives its slope)."""
    if deriv not in (0, 1):
        raise DomainError("deriv must be 0 or 1")
    out = _veff_parts(ctx, q, deriv)
    return out if np.ndim(out) else float(out)


def minimal_coupling(ctx: PortraitContext, q):
    """Vector-potential term A(q) = hbar^2 gamma m'/m = -hbar^2 gamma M'/M."""
    g = ctx.window.gamma
    q = np.asarray(q, dtype=float)
    if g == 0.0:
        out = np.zeros_like(q)
    else:
        M, M1 = mass_terms(q, ctx.model.a, ctx.model.b, ctx.model.inv_mass_scale,
                           ctx.hbar / ctx.sigma_check, order=1)
        _floor_check(ctx, M)
        out = -ctx.hbar**2 * g * M1 / M
    return out if out.ndim else float(out)


def h_check(ctx: PortraitContext, q, p):
    """Semi-classical Hamiltonian (M/2)(p - A)^2 + V_eff."""
    M = m_check(ctx, q)
    A = minimal_coupling(ctx, q)
    return 0.5 * M * (np.asarray(p) - A) ** 2 + v_eff_check(ctx, q)


def portrait_p2h(h, gamma: float, sigma_l: float, hbar: float, q, p, *, floor: float = 0.0):
    """Portrait of p^2 h(q) given the portrait ``h(q, deriv)`` of h and its derivatives.

    Evaluates h (p + hbar^2 gamma h'/h)^2 + h [hbar^4 gamma^2 (h'/h)' + 2 hbar^2/sigma_l^2]
    in the expanded form, which has no division by h.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    h0 = np.asarray(h(q, 0))
    if np.any(h0 <= floor):
        raise MassFloorError("profile below floor")
    h1 = h(q, 1)
    h2 = h(q, 2)
    hb2 = hbar * hbar
    out = h0 * p * p + 2 * p * gamma * hb2 * h1 + gamma**2 * hb2 * hb2 * h2 + 2 * hb2 * h0 / sigma_l**2
    return out if np.ndim(out) else float(out)


# -- grid oracles -----------------------------------------------------------------


def _kernel_halfwidths(w: GaussianWindow, grid: PhaseGrid, nsig: float = 9.5):
    h2 = w.hbar**2
    al = w.lam_l2 / (4 * h2)
    ap = w.lam_p2 / (4 * h2)
    a0 = w.lam0 / h2
    quad = np.array([[al, -a0 / 2], [-a0 / 2, ap]])
    cov = np.linalg.inv(2 * quad)
    nq = int(math.ceil(nsig * math.sqrt(cov[0, 0]) / grid.qgrid.dx))
    np_ = int(math.ceil(nsig * math.sqrt(cov[1, 1]) / grid.pgrid.dx))
    return min(nq, grid.qgrid.n - 1), min(np_, grid.pgrid.n - 1)


def portrait_numeric(f, grid: PhaseGrid, w: GaussianWindow) -> np.ndarray:
    """Brute-force portrait: convolution of ``f`` with the normalized window autocorrelation.

    Values within one kernel half-width of the grid boundary see a truncated
    kernel; an :class:`EdgeLeakage` warning is issued if ``f`` is not
    negligible there.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise GridError("field shape does not match grid")
    if not math.isclose(grid.hbar, w.hbar):
        raise GridError("grid and window use different hbar")
    check_edges(f)
    nq, np_ = _kernel_halfwidths(w, grid)
    kgrid = PhaseGrid(Grid1D.centered(2 * nq + 1, grid.qgrid.dx),
                      Grid1D.centered(2 * np_ + 1, grid.pgrid.dx), grid.hbar)
    kq, kp = kgrid.mesh()
    kernel = fs_autocorr_closed(w)(kq, kp) / (2 * math.pi * w.hbar)
    return convolve2(kernel, f, grid, kernel_grid=kgrid)


def _factor_kernel(factor, grid: Grid1D, hbar: float, conj: bool):
    kgrid = grid.offsets()
    dual = kgrid.dual(hbar)
    k = dual.points
    g = factor(k) * factor(-k)
    ker = fourier1(g, dual, hbar, inverse=conj, out_grid=kgrid) / math.sqrt(2 * math.pi * hbar)
    return ker.real, kgrid


def portrait_separable(u, qgrid: Grid1D, v, pgrid: Grid1D, w: GaussianWindow):
    """Portrait of u(q) v(p) under a separable window, as a closure in (q, p).

    ``u`` and ``v`` are samples on ``qgrid`` and ``pgrid``.  The q-profile is
    smoothed by the transform of mu(p) mu(-p) and the p-profile by that of
    lambda(q) lambda(-q); both kernels have unit mass.  The closure
    interpolates linearly between grid nodes.
    """
    if not isinstance(w, GaussianWindow) or not w.separable:
        raise InvalidWindow("portrait_separable needs gamma = 0")
    kq, gq = _factor_kernel(w.mu_factor, qgrid, w.hbar, conj=False)
    kp, gp = _factor_kernel(w.lam_factor, pgrid, w.hbar, conj=True)
    us = convolve1(kq, np.asarray(u, dtype=float), qgrid, kernel_grid=gq)
    vs = convolve1(kp, np.asarray(v, dtype=float), pgrid, kernel_grid=gp)
    qpts, ppts = qgrid.points, pgrid.points

    def portrait(q, p):
        out = np.interp(q, qpts, us) * np.interp(p, ppts, vs)
        return out if np.ndim(out) else float(out)

    portrait.q_profile = us
    portrait.p_profile = vs
    return portrait
