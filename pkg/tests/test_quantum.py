import math
from dataclasses import dataclass

import numpy as np
import pytest
from conftest import figure_ctx
from scipy.linalg import eigh_tridiagonal

from whquant.core import Grid1D
from whquant.errors import AsymmetryWarning, GridError, InvalidWindow, OrderError
from whquant.portrait import b_sigma, chi_hat_profile, h_check, mass_terms, v_eff_check
from whquant.quantum import (
    GridOperator,
    build_hamiltonian,
    coherent_state,
    expectation,
    momentum_operator,
    momentum_squared,
    position_operator,
    quantize_L_pn,
    quantize_momentum_fn,
    quantize_potential,
    quantum_v_eff,
    spectrum,
    window_operator,
)
from whquant.windows import BornJordanWindow, GaussianWindow, UnitWindow, coherent_window


def wide_grid(ctx, n, pad=0.5):
    m, w = ctx.model, ctx.window
    margin = 4 * ctx.hbar / w.sigma_p
    return Grid1D.spanning(m.a - margin - pad, m.b + margin + pad, n)


def hard_wall_levels(V0, n=4000, a=1.0, b=5.0, q0=3.0, k=5):
    """Lowest levels of -1/2 d/dx W d/dx + V on (a, b), W = (x-a)(b-x), Dirichlet walls."""
    h = (b - a) / n
    x = a + h * np.arange(1, n)
    xm = a + h * (np.arange(n) + 0.5)
    W = (xm - a) * (b - xm)
    d = 0.5 * (W[:-1] + W[1:]) / h**2 + 0.5 * V0 * (x - q0) ** 2
    e = -0.5 * W[1:-1] / h**2
    return eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))[0]


# -- grid operators ----------------------------------------------------------------------


def test_operator_shape_checked():
    with pytest.raises(GridError):
        GridOperator(Grid1D.centered(8, 0.1), np.eye(7))


def test_operator_rejects_nonfinite():
    m = np.eye(8)
    m[2, 2] = np.nan
    with pytest.raises(GridError):
        GridOperator(Grid1D.centered(8, 0.1), m)


def test_operator_rejects_asymmetric():
    m = np.eye(8)
    m[0, 1] = 1.0
    with pytest.raises(GridError):
        GridOperator(Grid1D.centered(8, 0.1), m)


def test_momentum_hermitian_and_squared_positive():
    g = Grid1D.centered(64, 0.1)
    assert momentum_operator(g).hermiticity_residual() == 0.0
    assert momentum_squared(g).eigvalsh()[0] > 0


def test_canonical_commutator_second_order():
    errs = []
    for n in (200, 400, 800):
        g = Grid1D.centered(n, 8.0 / n)
        psi = np.exp(-g.points**2 / 0.5)
        Q, P = position_operator(g).matrix, momentum_operator(g).matrix
        err = np.max(np.abs((Q @ P - P @ Q) @ psi - 1j * psi)) / np.max(np.abs(psi))
        assert err < 4 * g.dx**2
        errs.append(err)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


# -- Hamiltonian -----------------------------------------------------------------------------


@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_hamiltonian_hermitian(gamma):
    ctx = figure_ctx(gamma=gamma)
    H = build_hamiltonian(ctx, wide_grid(ctx, 256))
    assert H.hermiticity_residual() < 1e-12 * np.max(np.abs(H.matrix))
    assert np.iscomplexobj(H.matrix) == (gamma != 0.0)


def test_hamiltonian_grid_checks():
    ctx = figure_ctx()
    with pytest.raises(GridError):
        build_hamiltonian(ctx, wide_grid(ctx, 32))
    with pytest.raises(GridError):
        build_hamiltonian(ctx, Grid1D.spanning(0.9, 5.1, 256))


@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_hamiltonian_bounded_below(gamma):
    # the lowest eigenvalue converges under refinement instead of drifting downwards
    ctx = figure_ctx(gamma=gamma)
    e0 = [build_hamiltonian(ctx, wide_grid(ctx, n)).eigvalsh()[0] for n in (128, 256, 512, 1024)]
    d = np.abs(np.diff(e0))
    assert d[0] > 3 * d[1] > 9 * d[2]
    assert e0[-1] > -0.1


def test_ground_energy_decreases_with_sigma():
    ground, vmin = [], []
    for s in (4.0, 8.0, 16.0):
        ctx = figure_ctx(sigma=s, V0=200.0)
        vals, _ = spectrum(build_hamiltonian(ctx, wide_grid(ctx, 512)), ctx.model.interval,
                           n_states=1, min_weight=0.9)
        ground.append(vals[0])
        vmin.append(np.min(v_eff_check(ctx, np.linspace(1.5, 4.5, 301))))
    assert ground[0] > ground[1] > ground[2]
    assert all(e > v for e, v in zip(ground, vmin))


def test_level_spacings_approach_hard_wall_oscillator():
    # the inverse mass is quadratic, so different orderings differ by a constant
    # and only the spacings are compared
    ref = np.diff(hard_wall_levels(200.0))
    errs = []
    for s in (8.0, 16.0, 32.0):
        ctx = figure_ctx(sigma=s, V0=200.0)
        vals, _ = spectrum(build_hamiltonian(ctx, wide_grid(ctx, 1024)), ctx.model.interval,
                           n_states=5, min_weight=0.9)
        errs.append(np.max(np.abs(np.diff(vals) - ref)))
    assert errs[0] > 2 * errs[1] > 4 * errs[2]
    assert errs[2] < 0.01


def test_spectrum_filter_and_ordering():
    ctx = figure_ctx(V0=200.0)
    H = build_hamiltonian(ctx, wide_grid(ctx, 256))
    vals, vecs = spectrum(H, ctx.model.interval, n_states=4, min_weight=0.9)
    assert np.all(np.diff(vals) > 0)
    x = H.grid.points
    inside = (x >= 1) & (x <= 5)
    assert np.all(np.sum(np.abs(vecs[inside]) ** 2, axis=0) >= 0.9)
    all_vals, _ = spectrum(H)
    assert len(all_vals) == 256


def test_coherent_expectations_track_portrait():
    ctx = figure_ctx()
    g = Grid1D.spanning(-1.5, 7.5, 600)
    H = build_hamiltonian(ctx, g)
    pts = [(q, p) for q in (2.5, 3.0, 3.5) for p in (0.0, 1.0, 2.0)]
    quantum = np.array([expectation(H, coherent_state(g, q, p)) for q, p in pts])
    classical = np.array([h_check(ctx, q, p) for q, p in pts])
    for i in range(len(pts)):
        for j in range(len(pts)):
            if classical[i] > classical[j] + 0.3:
                assert quantum[i] > quantum[j]
    assert quantum[0] == pytest.approx(quantum[6], rel=1e-10)


def test_coherent_state_normalized():
    g = Grid1D.centered(256, 0.05)
    psi = coherent_state(g, 0.3, 1.2)
    assert np.sum(np.abs(psi) ** 2) * g.dx == pytest.approx(1.0, abs=1e-14)
    assert expectation(position_operator(g), psi) == pytest.approx(0.3, abs=1e-12)


# -- window operator and quantized potentials -------------------------------------------------


def test_window_operator_matches_profile():
    ctx = figure_ctx()
    errs = []
    for n in (401, 801, 1601):
        g = Grid1D.spanning(-2, 8, n)
        E = window_operator(ctx.window, ctx.model.interval, g)
        assert E.is_diagonal
        errs.append(np.max(np.abs(E.diagonal() - chi_hat_profile(ctx, g.points))))
    assert errs[-1] < 2e-5
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_window_operator_unit_is_sharp():
    ctx = figure_ctx()
    g = Grid1D.spanning(-2, 8, 201)
    E = window_operator(UnitWindow(), ctx.model.interval, g)
    np.testing.assert_array_equal(E.diagonal(), ctx.model.interval.indicator(g.points))


def test_window_operator_eigenvalues_in_unit_interval():
    ctx = figure_ctx()
    ev = window_operator(ctx.window, ctx.model.interval, Grid1D.spanning(-2, 8, 201)).eigvalsh()
    assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


def test_window_operator_needs_separable_window():
    with pytest.raises(InvalidWindow):
        window_operator(GaussianWindow(4, 4, 0.1), figure_ctx().model.interval, Grid1D.spanning(0, 6, 64))


def test_quantize_potential_unit_window_pointwise():
    g = Grid1D.spanning(-1, 1, 65)
    V = np.cos(3 * g.points)
    np.testing.assert_array_equal(quantize_potential(V, UnitWindow(), g).diagonal(), V)
    np.testing.assert_array_equal(quantize_potential(V, BornJordanWindow(), g).diagonal(), V)


def test_quantize_potential_profile_shape():
    with pytest.raises(GridError):
        quantize_potential(np.zeros(5), UnitWindow(), Grid1D.spanning(0, 1, 6))


def test_quantized_truncated_parabola():
    # analytic Gaussian smoothing of (V0/2)(q-q0)^2 chi(q), std hbar/sigma_p
    ctx = figure_ctx()
    m, w, h = ctx.model, ctx.window, ctx.hbar
    errs = []
    for n in (401, 801, 1601):
        g = Grid1D.spanning(-2, 8, n)
        x = g.points
        qv = quantize_potential(lambda q: 0.5 * m.V0 * (q - m.q0) ** 2 * m.interval.indicator(q), w, g).diagonal()
        s = h / w.sigma_p
        chi = b_sigma(w.sigma_p / math.sqrt(2), m.interval, x, h)
        ga = np.exp(-((x - m.a) ** 2) / (2 * s * s))
        gb = np.exp(-((x - m.b) ** 2) / (2 * s * s))
        ref = (0.5 * m.V0 * ((x - m.q0) ** 2 + s * s) * chi
               - 0.5 * m.V0 * s / math.sqrt(2 * math.pi) * ((x + m.b - 2 * m.q0) * gb - (x + m.a - 2 * m.q0) * ga))
        inner = (x > -1) & (x < 7)
        errs.append(np.max(np.abs(qv - ref)[inner]))
    assert errs[-1] < 2e-4
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_quantum_veff_decomposition():
    # with the tail halved, V_eff is the quantized truncated parabola plus hbar^2 W / sigma_l^2
    ctx = figure_ctx()
    m, w, h = ctx.model, ctx.window, ctx.hbar
    g = Grid1D.spanning(-2, 8, 1601)
    x = g.points
    qv = quantize_potential(lambda q: 0.5 * m.V0 * (q - m.q0) ** 2 * m.interval.indicator(q), w, g).diagonal()
    W = mass_terms(x, m.a, m.b, m.inv_mass_scale, h / w.sigma_p, order=0)[0]
    W = np.where(W > m.mass_floor, W, 0.0)
    inner = (x > -1) & (x < 7)
    half = quantum_v_eff(ctx, x, tail_scale=0.5) - h * h * W / w.sigma_l**2 - qv
    full = quantum_v_eff(ctx, x) - h * h * W / w.sigma_l**2 - qv
    assert np.max(np.abs(half[inner])) < 2e-4
    assert np.max(np.abs(full[inner])) > 0.1


@pytest.mark.parametrize("w", [UnitWindow(), GaussianWindow(2.0, 3.0, 0.0), coherent_window()],
                         ids=["unit", "gauss", "coherent"])
def test_quantized_momentum_is_derivative(w):
    g = Grid1D.centered(256, 0.1)
    u = g.points - 0.3
    psi = np.exp(-u * u)
    A = quantize_momentum_fn(lambda p: p, w, g)
    np.testing.assert_allclose(A.apply(psi), 2j * u * psi, atol=1e-10)


@pytest.mark.parametrize("w", [UnitWindow(), GaussianWindow(2.0, 3.0, 0.0), coherent_window()],
                         ids=["unit", "gauss", "coherent"])
def test_quantized_momentum_square_shift(w):
    g = Grid1D.centered(256, 0.1)
    u = g.points - 0.3
    psi = np.exp(-u * u)
    shift = 0.0 if isinstance(w, UnitWindow) else w.hbar**2 / w.sigma_l**2
    A = quantize_momentum_fn(lambda p: p * p, w, g)
    np.testing.assert_allclose(A.apply(psi), (2 - 4 * u * u + shift) * psi, atol=1e-9)


# -- L(q) p^n -------------------------------------------------------------------------------


def test_L_pn_constant_p2_shift():
    w = GaussianWindow(2.0, 3.0, 0.0)
    g = Grid1D.centered(256, 0.1)
    A = quantize_L_pn(lambda x: np.ones_like(x), 2, w, g).matrix
    D = A - momentum_squared(g).matrix
    mid = slice(100, 156)
    np.testing.assert_allclose(np.diag(D)[mid], w.hbar**2 / w.sigma_l**2, atol=1e-10)
    assert np.max(np.abs((D - np.diag(np.diag(D)))[mid, mid])) < 1e-10


def test_L_pn_order_zero_diagonal():
    w = GaussianWindow(2.0, 3.0, 0.0)
    g = Grid1D.spanning(-3, 3, 121)
    L = np.exp(-g.points**2)
    A = quantize_L_pn(L, 0, w, g)
    np.testing.assert_array_equal(A.matrix, quantize_potential(L, w, g).matrix)


def test_L_pn_order_one_symmetric():
    g = Grid1D.spanning(-3, 3, 121)
    A = quantize_L_pn(lambda x: 1 + x * x, 1, GaussianWindow(2.0, 3.0, 0.0), g)
    assert A.hermiticity_residual() < 1e-14


def test_L_pn_kinetic_matches_hamiltonian_block():
    ctx = figure_ctx()
    m, w = ctx.model, ctx.window
    g = Grid1D.spanning(-1.5, 7.5, 720)
    Hk = build_hamiltonian(ctx, g).matrix - np.diag(quantum_v_eff(ctx, g.points))
    A = quantize_L_pn(lambda x: 0.5 * m.inverse_mass(x), 2, w, g).matrix
    assert np.linalg.norm(A - Hk, 2) < 1e-3 * np.linalg.norm(Hk, 2)
    diffs = []
    for c in (2.5, 3.0, 3.5):
        for k in (0.0, 1.0, 2.0):
            psi = coherent_state(g, c, k, 0.4)
            diffs.append(expectation(GridOperator(g, A), psi) - expectation(GridOperator(g, Hk), psi))
    # orderings differ by terms of order hbar^2 that are nearly constant in the interior
    assert np.ptp(diffs) < 0.02 and abs(np.mean(diffs)) < 0.25


def test_L_pn_order_error():
    with pytest.raises(OrderError):
        quantize_L_pn(lambda x: x, 3, UnitWindow(), Grid1D.spanning(0, 1, 16))


def test_L_pn_needs_separable_window():
    with pytest.raises(InvalidWindow):
        quantize_L_pn(lambda x: x, 1, GaussianWindow(2, 2, 0.1), Grid1D.spanning(0, 1, 16))


@dataclass(frozen=True)
class _ShiftedWindow(GaussianWindow):
    def lam_factor(self, q, deriv=0):
        return super().lam_factor(np.asarray(q) - 0.5, deriv)


def test_L_pn_asymmetry_warning():
    w = _ShiftedWindow(2.0, 3.0, 0.0)
    with pytest.warns(AsymmetryWarning):
        A = quantize_L_pn(lambda x: np.ones_like(x), 1, w, Grid1D.spanning(-3, 3, 64))
    assert A.hermiticity_residual() > 0
