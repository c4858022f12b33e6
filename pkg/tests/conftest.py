import numpy as np
import pytest

from multiwell.landscape import MollifiedLandscape, Well, build_landscape, mollify


def flat_landscape(bound=5.0, n=65):
    """Zero potential and zero drift everywhere: pure heat/noise dynamics."""
    axis = np.linspace(-bound, bound, n)
    zeros = np.zeros((n, n))
    return MollifiedLandscape(bounds=(-bound, bound, -bound, bound),
                              us=axis, vs=axis, grid=zeros,
                              grad_u=zeros, grad_v=zeros,
                              filter_width=1.0, grad_tol=1.0, source=None)


def isolated_well_landscape(center=(0.25, 0.25), weight=1.0, filter_width=0.05):
    """Two wells with the far one out of dynamical reach; centers on grid nodes.

    Grid spacing is 0.025 over (-1, 11), so any center with coordinates
    that are multiples of 0.025 sits exactly on a node.
    """
    raw = build_landscape([Well(center, weight), Well((10.0, 10.0), weight)])
    return mollify(raw, filter_width, (-1.0, 11.0, -1.0, 11.0), 481)


def quad_landscape(filter_width=0.02, n_grid=241):
    """Four node-aligned wells in the unit square; cell 0.0125 over (-0.5, 2.5)."""
    wells = [Well((0.25, 0.25), 1.0), Well((0.75, 0.25), 1.0),
             Well((0.75, 0.75), 1.5), Well((0.25, 0.75), 1.5)]
    raw = build_landscape(wells)
    return mollify(raw, filter_width, (-0.5, 2.5, -0.5, 2.5), n_grid)


def rk4_flow(land, z0, t_end, dt):
    """dt^2-accurate reference for dz/dt = drift(z) on the interpolated field."""
    z = np.array(z0, dtype=float)
    n = int(round(t_end / dt))
    path = np.empty((n + 1, 2))
    path[0] = z

    def f(p):
        fu, gv = land.drift_at(p[0], p[1])
        return np.array([float(fu), float(gv)])

    for i in range(n):
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        path[i + 1] = z
    return path


@pytest.fixture(scope="session")
def quad_land():
    return quad_landscape()
