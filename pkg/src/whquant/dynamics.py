"""Hamiltonian dynamics generated by the semi-classical portrait Hamiltonian."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import Grid1D, PhaseGrid
from .errors import DomainError, MassFloorError, StepError
from .portrait import PortraitContext, mass_terms, minimal_coupling, m_check, parabola_terms, v_eff_check

__all__ = [
    "PhasePoint",
    "TrajectoryStatus",
    "Trajectory",
    "hamilton_rhs",
    "vector_field",
    "integrate",
    "level_set",
    "reparam_h",
    "turning_points",
    "period",
    "state_at",
    "confinement_intervals",
    "floor_points",
]


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise DomainError("phase point must be finite")


class TrajectoryStatus(enum.Enum):
    COMPLETED = "completed"
    ESCAPE = "TrajectoryEscape"


@dataclass(frozen=True)
class Trajectory:
    """Integration record; ``E`` is recomputed from the Hamiltonian at each sample."""

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    E: np.ndarray
    qdot: np.ndarray
    dt: float
    status: TrajectoryStatus

    def __len__(self):
        return len(self.t)

    @property
    def escaped(self) -> bool:
        return self.status is TrajectoryStatus.ESCAPE

    @property
    def energy_drift(self) -> float:
        """max |E(t) - E(0)| / max(|E(0)|, 1e-300)."""
        return float(np.max(np.abs(self.E - self.E[0])) / max(abs(self.E[0]), 1e-300))

    def rows(self):
        return zip(self.t, self.q, self.p, self.E, self.qdot)


class _Model:
    """Scalar evaluation of the Hamiltonian and its flow with math-module calls."""

    def __init__(self, ctx: PortraitContext):
        m, w = ctx.model, ctx.window
        self.ctx = ctx
        self.a, self.b, self.c = m.a, m.b, m.inv_mass_scale
        self.s_mass = ctx.hbar / ctx.sigma_check
        self.s_pot = math.sqrt(2.0) * ctx.hbar / w.sigma_p
        self.q0 = m.q0
        self.half_v0 = 0.5 * m.V0
        self.h2 = ctx.hbar**2
        self.g = w.gamma
        self.conf = self.h2 / w.sigma_l**2
        self.k4 = 0.5 * self.h2 * self.h2 * self.g * self.g
        self.eps = m.mass_floor

    def _mass(self, q, order=3):
        return mass_terms(q, self.a, self.b, self.c, self.s_mass, math.exp, math.erfc, order)

    def _pot(self, q):
        return parabola_terms(q, self.a, self.b, self.q0, self.s_pot, math.exp, math.erfc)

    def energy(self, q, p):
        M, M1, M2 = self._mass(q, 2)
        if self.g != 0.0 and M <= self.eps:
            raise MassFloorError(f"inverse mass below floor at q={q:.6g}")
        T, _ = self._pot(q)
        V = self.half_v0 * T + self.conf * M
        A = 0.0
        if self.g != 0.0:
            V += self.k4 * (M2 - M1 * M1 / M)
            A = -self.h2 * self.g * M1 / M
        u = p - A
        return 0.5 * M * u * u + V

    def rhs(self, q, p):
        M, M1, M2, M3 = self._mass(q)
        if M <= self.eps:
            raise MassFloorError(f"inverse mass below floor at q={q:.6g}")
        _, dT = self._pot(q)
        V1 = self.half_v0 * dT + self.conf * M1
        A = A1 = 0.0
        if self.g != 0.0:
            iM = 1.0 / M
            r = M1 * iM
            V1 += self.k4 * (M3 - 2 * M2 * r + M1 * r * r)
            A = -self.h2 * self.g * r
            A1 = -self.h2 * self.g * (M2 * iM - r * r)
        u = p - A
        return M * u, -0.5 * M1 * u * u + M * u * A1 - V1

    def step(self, q, p, dt):
        k1q, k1p = self.rhs(q, p)
        h = 0.5 * dt
        k2q, k2p = self.rhs(q + h * k1q, p + h * k1p)
        k3q, k3p = self.rhs(q + h * k2q, p + h * k2p)
        k4q, k4p = self.rhs(q + dt * k3q, p + dt * k3p)
        s = dt / 6.0
        return (q + s * (k1q + 2 * k2q + 2 * k3q + k4q),
                p + s * (k1p + 2 * k2p + 2 * k3p + k4p))


def hamilton_rhs(ctx: PortraitContext, s: PhasePoint) -> tuple[float, float]:
    """Velocity and force (dH/dp, -dH/dq) of the semi-classical Hamiltonian.

    The force is written with A'(q) expanded, which stays regular where
    M'(q) = 0.
    """
    return _Model(ctx).rhs(float(s.q), float(s.p))


def vector_field(ctx: PortraitContext, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Hamiltonian vector field on a phase grid; NaN below the mass floor."""
    Q, P = grid.mesh()
    mdl = _Model(ctx)
    q = grid.qgrid.points
    M, M1, M2, M3 = mass_terms(q, mdl.a, mdl.b, mdl.c, mdl.s_mass)
    _, dT = parabola_terms(q, mdl.a, mdl.b, mdl.q0, mdl.s_pot)
    ok = M > mdl.eps
    Ms = np.where(ok, M, 1.0)
    V1 = mdl.half_v0 * dT + mdl.conf * M1
    A = np.zeros_like(q)
    A1 = np.zeros_like(q)
    if mdl.g != 0.0:
        r = M1 / Ms
        V1 = V1 + mdl.k4 * (M3 - 2 * M2 * r + M1 * r * r)
        A = -mdl.h2 * mdl.g * r
        A1 = -mdl.h2 * mdl.g * (M2 / Ms - r * r)
    u = P - A[:, None]
    qdot = M[:, None] * u
    pdot = -0.5 * M1[:, None] * u * u + M[:, None] * u * A1[:, None] - V1[:, None]
    mask = ~ok[:, None] | np.zeros(P.shape, dtype=bool)
    return np.where(mask, np.nan, qdot), np.where(mask, np.nan, pdot)


def floor_points(ctx: PortraitContext) -> tuple[float, float]:
    """Positions left of a and right of b where the inverse mass meets the floor."""
    mdl = _Model(ctx)
    step = mdl.s_mass
    out = []
    for edge, sgn in ((mdl.a, -1.0), (mdl.b, 1.0)):
        x = edge
        while mdl._mass(x, 0)[0] > mdl.eps:
            x += sgn * step
        lo, hi = sorted((x - sgn * step, x))
        out.append(brentq(lambda y: mdl._mass(y, 0)[0] - mdl.eps, lo, hi, xtol=1e-14))
    return out[0], out[1]


class _NoReturn:
    """Outward motion past which no potential barrier reaches the energy."""

    def __init__(self, ctx, n=4001):
        qa, qb = floor_points(ctx)
        a, b = ctx.model.a, ctx.model.b
        pad = 1e-9 * (b - a)
        qa, qb = qa + pad, qb - pad
        self.right = np.linspace(0.5 * (a + b), qb, n)
        self.left = np.linspace(qa, 0.5 * (a + b), n)
        vr = v_eff_check(ctx, self.right)
        vl = v_eff_check(ctx, self.left)
        # running max toward each floor
        self.vmax_right = np.maximum.accumulate(vr[::-1])[::-1]
        self.vmax_left = np.maximum.accumulate(vl)

    def escaping(self, q, qdot, E):
        if qdot > 0 and q >= self.right[0]:
            i = min(int(np.searchsorted(self.right, q)), len(self.right) - 1)
            return self.vmax_right[max(i - 1, 0)] < E
        if qdot < 0 and q <= self.left[-1]:
            i = int(np.searchsorted(self.left, q))
            return self.vmax_left[min(i, len(self.left) - 1)] < E
        return False


def integrate(ctx: PortraitContext, s0: PhasePoint, dt: float, n_steps: int, *,
              detect_no_return: bool = True, audit_rtol: float = 1e-3) -> Trajectory:
    """Classical RK4 integration with a per-sample energy audit.

    Integration stops with status ``ESCAPE`` when a stage would enter the
    mass-floor zone or, with ``detect_no_return``, once the particle moves
    outward with no barrier left between it and the floor.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise DomainError("dt must be positive")
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    mdl = _Model(ctx)
    q, p = float(s0.q), float(s0.p)
    qd, _ = mdl.rhs(q, p)
    E0 = mdl.energy(q, p)
    guard = _NoReturn(ctx) if detect_no_return else None
    ts, qs, ps, Es, qds = [0.0], [q], [p], [E0], [qd]
    status = TrajectoryStatus.COMPLETED
    scale = max(abs(E0), 1e-300)
    prev = E0
    for k in range(1, n_steps + 1):
        if guard is not None and guard.escaping(q, qd, E0):
            status = TrajectoryStatus.ESCAPE
            break
        try:
            q, p = mdl.step(q, p, dt)
            qd, _ = mdl.rhs(q, p)
        except MassFloorError:
            status = TrajectoryStatus.ESCAPE
            break
        E = mdl.energy(q, p)
        if abs(E - prev) > audit_rtol * scale:
            raise StepError(f"energy jump {abs(E - prev):.3g} at step {k}; reduce dt")
        prev = E
        ts.append(k * dt)
        qs.append(q)
        ps.append(p)
        Es.append(E)
        qds.append(qd)
    return Trajectory(np.array(ts), np.array(qs), np.array(ps), np.array(Es), np.array(qds), dt, status)


def turning_points(traj: Trajectory) -> np.ndarray:
    """Times where qdot changes sign, refined by a quadratic through three samples."""
    v = traj.qdot
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    out = []
    for i in idx:
        j = min(max(i, 1), len(v) - 2)
        t3 = traj.t[j - 1:j + 2]
        c = np.polyfit(t3 - t3[1], v[j - 1:j + 2], 2)
        roots = np.roots(c) if abs(c[0]) > 0 else np.array([-c[2] / c[1]])
        roots = roots[np.isreal(roots)].real + t3[1]
        lo, hi = traj.t[i], traj.t[i + 1]
        inside = roots[(roots >= lo - 1e-12) & (roots <= hi + 1e-12)]
        if inside.size:
            out.append(float(inside[0]))
        else:
            out.append(float(lo - v[i] * (hi - lo) / (v[i + 1] - v[i])))
    return np.array(out)


def period(traj: Trajectory) -> float:
    """Orbit period from alternate turning points; NaN if fewer than three."""
    tp = turning_points(traj)
    if len(tp) < 3:
        return math.nan
    return float(tp[2] - tp[0])


def state_at(ctx: PortraitContext, traj: Trajectory, t: float) -> PhasePoint:
    """State at an arbitrary time by one partial RK4 step from the last sample before it."""
    if not traj.t[0] <= t <= traj.t[-1]:
        raise DomainError("time outside the trajectory")
    i = int(np.searchsorted(traj.t, t, side="right")) - 1
    h = t - traj.t[i]
    q, p = traj.q[i], traj.p[i]
    if h > 0:
        q, p = _Model(ctx).step(q, p, h)
    return PhasePoint(q, p)


def level_set(ctx: PortraitContext, E: float, qgrid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Branches p(q) = A(q) +/- sqrt(2 (E - V_eff) / M) of the curve H = E; NaN where empty."""
    q = qgrid.points
    M = m_check(ctx, q)
    ok = M > ctx.model.mass_floor
    qs = np.where(ok, q, ctx.model.interval.center)
    V = v_eff_check(ctx, qs)
    A = minimal_coupling(ctx, qs)
    rad = 2.0 * (E - V) / np.where(ok, M, 1.0)
    ok &= rad >= 0
    root = np.sqrt(np.where(ok, rad, 0.0))
    return np.where(ok, A + root, np.nan), np.where(ok, A - root, np.nan)


def reparam_h(ctx: PortraitContext, q, qdot):
    """Energy in velocity variables, qdot^2 / (2 M) + V_eff."""
    M = m_check(ctx, q)
    if np.any(np.asarray(M) <= ctx.model.mass_floor):
        raise MassFloorError("inverse mass below floor")
    out = np.asarray(qdot) ** 2 / (2 * M) + v_eff_check(ctx, q)
    return out if np.ndim(out) else float(out)


def confinement_intervals(ctx: PortraitContext, E: float, n: int = 8001):
    """Connected q-ranges of the allowed region V_eff < E inside the floor points.

    Returns a list of ``(q_lo, q_hi, closed)``; a range is closed when both
    ends are turning points rather than the mass floor.
    """
    qa, qb = floor_points(ctx)
    pad = 1e-9 * ctx.model.interval.width
    q = np.linspace(qa + pad, qb - pad, n)
    allowed = v_eff_check(ctx, q) < E
    out = []
    i = 0
    while i < n:
        if not allowed[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and allowed[j + 1]:
            j += 1
        closed = i > 0 and j < n - 1
        out.append((float(q[i]), float(q[j]), bool(closed)))
        i = j + 1
    return out
