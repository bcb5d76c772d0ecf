import warnings

import numpy as np
import pytest

from whquant.core import Grid1D, PhaseGrid
from whquant.errors import EdgeLeakage
from whquant.portrait import PdmOscillator, PortraitContext, portrait_numeric
from whquant.windows import GaussianWindow


def figure_ctx(gamma=0.0, q0=3.0, V0=3.0, sigma=4.0):
    return PortraitContext(PdmOscillator(V0=V0, q0=q0), GaussianWindow(sigma, sigma, gamma))


@pytest.fixture(scope="session")
def oracle_grid():
    return PhaseGrid(Grid1D.spanning(-2.0, 8.0, 801), Grid1D.spanning(-6.0, 6.0, 481), 1.0)


def numeric(f, grid, w):
    """portrait_numeric for fields that need not decay at the grid edge."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeLeakage)
        return portrait_numeric(f, grid, w)


def random_nodes(grid, rng, n, q_range, p_range):
    q, p = grid.qgrid.points, grid.pgrid.points
    iq = np.nonzero((q > q_range[0]) & (q < q_range[1]))[0]
    ip = np.nonzero((p > p_range[0]) & (p < p_range[1]))[0]
    return rng.choice(iq, n), rng.choice(ip, n)
