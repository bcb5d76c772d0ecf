"""Figure data sets: one builder per command, each returning named tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Grid1D, PhaseGrid
from .errors import ConfigError
from .dynamics import PhasePoint, confinement_intervals, integrate, level_set, vector_field
from .fock import calibrate_closed_form, fock_q0_closed, fock_q0_numeric
from .portrait import (
    Interval,
    PdmOscillator,
    PortraitContext,
    chi_check,
    m_check,
    minimal_coupling,
    v_eff_check,
)
from .quantum import build_hamiltonian, spectrum
from .windows import GaussianWindow

__all__ = [
    "Table",
    "Settings",
    "fmt",
    "build_chi",
    "build_mass",
    "build_veff",
    "build_phase",
    "build_qqdot",
    "build_traj",
    "build_spectrum",
    "build_fock",
    "BUILDERS",
    "FIGURE_MAP",
]


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering used in every output file."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.12g" % float(x)


@dataclass
class Table:
    """Column-oriented data set written as one output file."""

    name: str
    columns: list[str]
    rows: list[tuple]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        data = {c: [fmt(r[i]) for r in self.rows] for i, c in enumerate(self.columns)}
        return json.dumps({"name": self.name, "meta": self.meta, "columns": data}, indent=1) + "\n"

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([float(r[i]) for r in self.rows])


@dataclass(frozen=True)
class Settings:
    """Parameters shared by all builders (defaults: a=1, b=5, V0=3, q0=3, sigma=4)."""

    a: float = 1.0
    b: float = 5.0
    m0: float = 1.0
    L: float = 1.0
    V0: float = 3.0
    q0: float = 3.0
    sigma_l: float = 4.0
    sigma_p: float = 4.0
    gamma: float = 0.0
    hbar: float = 1.0
    q_min: float = -1.0
    q_max: float = 7.0
    n: int = 801
    extra: dict = field(default_factory=dict)

    def get(self, key, default):
        return self.extra.get(key, default)

    def model(self, **kw) -> PdmOscillator:
        base = dict(m0=self.m0, L=self.L, V0=self.V0, q0=self.q0, interval=Interval(self.a, self.b))
        base.update(kw)
        return PdmOscillator(**base)

    def window(self, **kw) -> GaussianWindow:
        base = dict(sigma_l=self.sigma_l, sigma_p=self.sigma_p, gamma=self.gamma, hbar=self.hbar)
        base.update(kw)
        return GaussianWindow(**base)

    def ctx(self, model_kw=None, window_kw=None) -> PortraitContext:
        return PortraitContext(self.model(**(model_kw or {})), self.window(**(window_kw or {})))

    def qgrid(self) -> Grid1D:
        return Grid1D.spanning(self.q_min, self.q_max, self.n)

    def with_extra(self, **kw) -> Settings:
        return replace(self, extra={**self.extra, **kw})


def _tag(x) -> str:
    return fmt(x).replace(".", "p").replace("-", "m")


def _profile(name, q, values, **meta):
    return Table(name, ["q", "value"], list(zip(q, values)), meta)


def build_chi(st: Settings) -> list[Table]:
    q = st.qgrid().points
    out = []
    for sp in st.get("sigma_p", (3.0, 5.0, 10.0)):
        ctx = st.ctx(window_kw=dict(sigma_p=sp, gamma=0.0))
        out.append(_profile(f"fig1_chi_sigmap{_tag(sp)}", q, chi_check(ctx, q), sigma_p=sp))
    return out


def build_mass(st: Settings) -> list[Table]:
    q = st.qgrid().points
    out = []
    for q0 in st.get("q0", (3.0, 3.5, 5.0)):
        m = st.model(q0=q0)
        out.append(_profile(f"fig2a_vchi_q0{_tag(q0)}", q, m.potential(q), q0=q0))
    for sp in st.get("sigma_p", (3.0, 5.0, 10.0)):
        ctx = st.ctx(window_kw=dict(sigma_p=sp, gamma=0.0))
        out.append(_profile(f"fig2b_mass_sigmap{_tag(sp)}", q, m_check(ctx, q), sigma_p=sp))
    return out


def build_veff(st: Settings) -> list[Table]:
    q = st.qgrid().points
    out = []
    for s in st.get("sigma_free", (2.0, 4.0, 6.0)):
        ctx = st.ctx(model_kw=dict(V0=0.0), window_kw=dict(sigma_l=s, sigma_p=s, gamma=0.0))
        out.append(_profile(f"fig3a_veff_V00_sigma{_tag(s)}", q, v_eff_check(ctx, q), sigma=s, V0=0.0))
    for s in st.get("sigma", (4.0, 10.0)):
        for q0 in st.get("q0", (3.0, 3.5, 5.0)):
            ctx = st.ctx(model_kw=dict(q0=q0), window_kw=dict(sigma_l=s, sigma_p=s, gamma=0.0))
            out.append(_profile(f"fig4_veff_sigma{_tag(s)}_q0{_tag(q0)}", q, v_eff_check(ctx, q),
                                sigma=s, q0=q0))
    return out


def _branches(ctx, E, qgrid, name, **meta):
    up, lo = level_set(ctx, E, qgrid)
    return Table(name, ["q", "p_plus", "p_minus"], list(zip(qgrid.points, up, lo)), dict(E=E, **meta))


def _field_table(ctx, name, n_field, q_range, p_range, **meta):
    grid = PhaseGrid(Grid1D.spanning(*q_range, n_field), Grid1D.spanning(*p_range, n_field), ctx.hbar)
    Fq, Fp = vector_field(ctx, grid)
    Q, P = grid.mesh()
    rows = list(zip(Q.ravel(), P.ravel(), Fq.ravel(), Fp.ravel()))
    return Table(name, ["q", "p", "Fq", "Fp"], rows, meta)


def _closed_table(name, entries):
    return Table(name, ["gamma", "q0", "E", "closed"], entries)


def build_phase(st: Settings) -> list[Table]:
    """Level sets, vector fields and the closed-contour table (Figs. 3b, 5, 7)."""
    qgrid = st.qgrid()
    n_field = int(st.get("field_n", 21))
    p_range = (-st.get("p_max", 6.0), st.get("p_max", 6.0))
    q_range = (st.q_min, st.q_max)
    out = []
    e_free = st.get("energy_free", 0.25)
    for s in st.get("sigma_free", (2.0, 4.0, 6.0)):
        ctx = st.ctx(model_kw=dict(V0=0.0), window_kw=dict(sigma_l=s, sigma_p=s, gamma=0.0))
        out.append(_branches(ctx, e_free, qgrid, f"fig3b_level_V00_sigma{_tag(s)}", sigma=s))
        out.append(_field_table(ctx, f"fig3b_field_V00_sigma{_tag(s)}", n_field, q_range, p_range, sigma=s))
    closed = []
    for fig, gamma in (("fig5", 0.0), ("fig7", st.get("gamma_coupled", 0.1))):
        for q0 in st.get("q0", (3.0, 3.5, 5.0)):
            ctx = st.ctx(model_kw=dict(q0=q0), window_kw=dict(gamma=gamma))
            for E in st.get("energies", (0.5, 2.0, 3.5)):
                out.append(_branches(ctx, E, qgrid, f"{fig}_level_q0{_tag(q0)}_E{_tag(E)}",
                                     q0=q0, gamma=gamma))
                ok = any(c for _, _, c in confinement_intervals(ctx, E))
                closed.append((gamma, q0, E, ok))
            out.append(_field_table(ctx, f"{fig}_field_q0{_tag(q0)}", n_field, q_range, p_range,
                                    q0=q0, gamma=gamma))
    out.append(_closed_table("fig5_fig7_closed_contours", closed))
    return out


def build_qqdot(st: Settings) -> list[Table]:
    """Curves of the velocity-form energy, qdot = +/- M (p - A) on each level set (Figs. 6, 8a)."""
    qgrid = st.qgrid()
    out = []
    for fig, gamma, q0s in (("fig6", 0.0, st.get("q0", (3.0, 3.5, 5.0))),
                            ("fig8a", st.get("gamma_coupled", 0.1), (st.q0,))):
        for q0 in q0s:
            ctx = st.ctx(model_kw=dict(q0=q0), window_kw=dict(gamma=gamma))
            q = qgrid.points
            for E in st.get("energies", (0.5, 2.0, 3.5)):
                up, lo = level_set(ctx, E, qgrid)
                ok = np.isfinite(up)
                qs = np.where(ok, q, st.a)
                M = np.where(ok, m_check(ctx, qs), np.nan)
                A = np.where(ok, minimal_coupling(ctx, qs), np.nan)
                rows = list(zip(q, M * (up - A), M * (lo - A)))
                out.append(Table(f"{fig}_qqdot_q0{_tag(q0)}_E{_tag(E)}", ["q", "qdot_plus", "qdot_minus"],
                                 rows, dict(E=E, q0=q0, gamma=gamma)))
    return out


def build_traj(st: Settings) -> list[Table]:
    """q(t) and qdot(t) from the initial conditions A (closed orbit) and B (wall-bound) (Fig. 8b-c)."""
    gamma = st.get("gamma_coupled", 0.1)
    ctx = st.ctx(window_kw=dict(gamma=gamma))
    dt = float(st.get("dt", 1e-3))
    steps = int(st.get("steps", 10000))
    q_start = float(st.get("q_start", st.q0))
    out = []
    for label, E in zip(("A", "B"), st.get("traj_energies", (2.0, 3.5))):
        up, _ = level_set(ctx, E, Grid1D(q_start, 1e-3, 2))
        if not np.isfinite(up[0]):
            raise ConfigError(f"no point of energy {E} at q = {q_start}")
        tr = integrate(ctx, PhasePoint(q_start, float(up[0])), dt, steps, detect_no_return=False)
        out.append(Table(f"fig8_traj_{label}", ["t", "q", "p", "E", "qdot"], list(tr.rows()),
                         dict(E=E, gamma=gamma, status=tr.status.value, drift=tr.energy_drift)))
    return out


def build_spectrum(st: Settings) -> list[Table]:
    """Confined levels of the grid Hamiltonian for each grid size."""
    ctx = st.ctx(model_kw=dict(V0=st.get("spectrum_V0", 200.0)), window_kw=dict(gamma=0.0))
    margin = float(st.get("margin", 4.0)) * st.hbar / st.sigma_p
    n_states = int(st.get("n_states", 5))
    iv = ctx.model.interval
    out = []
    for n in st.get("sizes", (256, 512, 1024)):
        g = Grid1D.spanning(st.a - margin, st.b + margin, int(n))
        vals, _ = spectrum(build_hamiltonian(ctx, g), iv, n_states=n_states,
                           min_weight=float(st.get("min_weight", 0.9)))
        out.append(Table(f"spectrum_n{int(n)}", ["index", "eigenvalue"], list(enumerate(vals)), dict(n=int(n))))
    return out


def build_fock(st: Settings) -> dict:
    """Quadrature Q0 of the configured window plus the closed-form calibration report."""
    w = GaussianWindow(st.get("fock_sigma_l", st.sigma_l), st.get("fock_sigma_p", st.sigma_p),
                       st.get("fock_gamma", 0.0), st.hbar)
    n_max = st.get("n_max", None)
    F = fock_q0_numeric(w, n_max)
    doc = F.to_json()
    cal_windows = [w, GaussianWindow(1.2, 0.9, 0.0, st.hbar), GaussianWindow(1.2, 1.0, 0.3, st.hbar)]
    if st.hbar == 1.0:
        if st.get("strict_closed", False):
            doc["closed_form"] = fock_q0_closed(w, int(st.get("calibrate_n", 6))).to_json()
        doc["calibration"] = calibrate_closed_form(cal_windows, int(st.get("calibrate_n", 6)))
    return doc


BUILDERS = {
    "chi": build_chi,
    "mass": build_mass,
    "veff": build_veff,
    "phase": build_phase,
    "qqdot": build_qqdot,
    "traj": build_traj,
    "spectrum": build_spectrum,
}

# Figure family -> (producing command, output-name prefixes).
FIGURE_MAP = {
    "1": ("chi", ("fig1_",)),
    "2": ("mass", ("fig2a_", "fig2b_")),
    "3a": ("veff", ("fig3a_",)),
    "3b": ("phase", ("fig3b_",)),
    "4": ("veff", ("fig4_",)),
    "5": ("phase", ("fig5_",)),
    "6": ("qqdot", ("fig6_",)),
    "7": ("phase", ("fig7_", "fig5_fig7_")),
    "8a": ("qqdot", ("fig8a_",)),
    "8bc": ("traj", ("fig8_traj_",)),
}
