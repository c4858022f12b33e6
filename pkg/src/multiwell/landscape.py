"""Multi-well potential landscapes on the plane.

The raw potential is a pointwise minimum of weighted squared distances to a
set of well centers,

    F(u, v) = min_k  a_k * [(u - u_k)^2 + (v - v_k)^2],

which is continuous but has gradient kinks on the ridges between basins.
Simulations use a mollified version: F is sampled on a regular grid,
smoothed with a separable Gaussian filter, and differentiated with centered
differences; drift queries bilinearly interpolate the smoothed fields.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigurationError, OutOfDomainError

# Bounds must clear every well center by this many filter widths, and the
# smoothing kernel is truncated at the same radius, so the potential near a
# center never sees the replicate-padded edge.
BOUNDS_MARGIN_FILTERS = 3.0
KERNEL_TRUNCATE = 4.0


@dataclass(frozen=True)
class Well:
    """A single basin: center in state space and curvature weight a > 0."""

    center: tuple
    weight: float


@dataclass(frozen=True)
class RawLandscape:
    """Exact min-of-quadratics potential over an ordered list of wells."""

    wells: tuple
    labels: tuple
    centers: np.ndarray = field(repr=False, default=None)
    weights: np.ndarray = field(repr=False, default=None)

    def evaluate(self, u, v):
        """F(u, v) for array-like u, v (broadcasting, exact minimum)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        best = None
        for (cu, cv), a in zip(self.centers, self.weights):
            val = a * ((u - cu) ** 2 + (v - cv) ** 2)
            best = val if best is None else np.minimum(best, val)
        return best

    def classify(self, u, v):
        """Index of the well whose branch attains the minimum (lowest wins ties)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        branches = np.stack(
            [a * ((u - cu) ** 2 + (v - cv) ** 2)
             for (cu, cv), a in zip(self.centers, self.weights)]
        )
        return np.argmin(branches, axis=0)

    @property
    def n_wells(self):
        return len(self.wells)


def build_landscape(wells, labels=None):
    """Validate wells and assemble a :class:`RawLandscape`.

    Parameters
    ----------
    wells : sequence of Well
        At least two wells with positive weights and pairwise distinct
        centers.
    labels : sequence of str, optional
        One name per well; defaults to ``well0, well1, ...``.
    """
    wells = tuple(wells)
    if len(wells) < 2:
        raise ConfigurationError("need at least 2 wells")
    if labels is None:
        labels = tuple(f"well{k}" for k in range(len(wells)))
    labels = tuple(labels)
    if len(labels) != len(wells):
        raise ConfigurationError(
            f"{len(wells)} wells but {len(labels)} labels"
        )
    centers = np.array([w.center for w in wells], dtype=float)
    weights = np.array([w.weight for w in wells], dtype=float)
    if centers.shape != (len(wells), 2):
        raise ConfigurationError("well centers must be (u, v) pairs")
    if np.any(weights <= 0):
        bad = int(np.argmin(weights))
        raise ConfigurationError(
            f"well {bad} has non-positive weight {weights[bad]}"
        )
    for i in range(len(wells)):
        for j in range(i + 1, len(wells)):
            if np.all(centers[i] == centers[j]):
                raise ConfigurationError(
                    f"wells {i} and {j} share the center {tuple(centers[i])}"
                )
    return RawLandscape(wells=wells, labels=labels,
                        centers=centers, weights=weights)


@dataclass(frozen=True)
class MollifiedLandscape:
    """Gaussian-smoothed potential grid with centered-difference gradients.

    ``grid[i, j]`` holds the smoothed F at ``(us[i], vs[j])``; ``grad_u`` and
    ``grad_v`` are dF/du and dF/dv on the same nodes.  All queries are
    bilinear interpolations restricted to the bounds (no extrapolation).
    """

    bounds: tuple          # (u_min, u_max, v_min, v_max)
    us: np.ndarray = field(repr=False)
    vs: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    grad_u: np.ndarray = field(repr=False)
    grad_v: np.ndarray = field(repr=False)
    filter_width: float
    grad_tol: float
    source: RawLandscape

    @property
    def cell(self):
        """(du, dv) grid spacing."""
        return self.us[1] - self.us[0], self.vs[1] - self.vs[0]

    def _locate(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u_min, u_max, v_min, v_max = self.bounds
        bad = (u < u_min) | (u > u_max) | (v < v_min) | (v > v_max)
        bad |= ~np.isfinite(u) | ~np.isfinite(v)
        if np.any(bad):
            idx = int(np.argmax(np.atleast_1d(bad)))
            raise OutOfDomainError(
                f"point ({np.ravel(u)[idx]}, {np.ravel(v)[idx]}) outside "
                f"bounds {self.bounds}", index=idx)
        du, dv = self.cell
        fu = (u - u_min) / du
        fv = (v - v_min) / dv
        # snap to nodes so querying a node reproduces the stored value
        ru = np.round(fu)
        rv = np.round(fv)
        fu = np.where(np.abs(fu - ru) < 1e-9, ru, fu)
        fv = np.where(np.abs(fv - rv) < 1e-9, rv, fv)
        iu = np.clip(np.floor(fu).astype(int), 0, len(self.us) - 2)
        iv = np.clip(np.floor(fv).astype(int), 0, len(self.vs) - 2)
        return iu, iv, fu - iu, fv - iv

    def _interp(self, values, u, v):
        iu, iv, su, sv = self._locate(u, v)
        v00 = values[iu, iv]
        v10 = values[iu + 1, iv]
        v01 = values[iu, iv + 1]
        v11 = values[iu + 1, iv + 1]
        return ((1 - su) * (1 - sv) * v00 + su * (1 - sv) * v10
                + (1 - su) * sv * v01 + su * sv * v11)

    def value_at(self, u, v):
        """Interpolated smoothed potential at array-like points."""
        return self._interp(self.grid, u, v)

    def drift_at(self, u, v):
        """Negated interpolated gradient (-dF/du, -dF/dv) at array-like points."""
        iu, iv, su, sv = self._locate(u, v)
        w00 = (1 - su) * (1 - sv)
        w10 = su * (1 - sv)
        w01 = (1 - su) * sv
        w11 = su * sv
        fu = -(w00 * self.grad_u[iu, iv] + w10 * self.grad_u[iu + 1, iv]
               + w01 * self.grad_u[iu, iv + 1] + w11 * self.grad_u[iu + 1, iv + 1])
        gv = -(w00 * self.grad_v[iu, iv] + w10 * self.grad_v[iu + 1, iv]
               + w01 * self.grad_v[iu, iv + 1] + w11 * self.grad_v[iu + 1, iv + 1])
        return fu, gv


def default_bounds(raw, factor=3.0):
    """Rectangle scaled ``factor``-fold around the well bounding box.

    Degenerate extents (collinear wells) are widened to the largest span so
    the rectangle never collapses.
    """
    lo = raw.centers.min(axis=0)
    hi = raw.centers.max(axis=0)
    span = hi - lo
    widest = span.max() if span.max() > 0 else 1.0
    span = np.where(span <= 0, widest, span)
    mid = (lo + hi) / 2
    half = factor * span / 2
    return (mid[0] - half[0], mid[0] + half[0],
            mid[1] - half[1], mid[1] + half[1])


def default_filter_width(bounds):
    """2% of the bounds diagonal."""
    u_min, u_max, v_min, v_max = bounds
    return 0.02 * float(np.hypot(u_max - u_min, v_max - v_min))


def mollify(raw, filter_width, bounds, n_grid):
    """Sample F on a grid and smooth it with a Gaussian filter.

    Parameters
    ----------
    raw : RawLandscape
    filter_width : float
        Standard deviation of the Gaussian kernel, in state-space units.
        The kernel is truncated at 4 filter widths; edge handling is
        replicate padding.
    bounds : tuple
        (u_min, u_max, v_min, v_max); must contain every center with a
        margin of at least 3 filter widths.
    n_grid : int
        Nodes per axis (>= 64).

    Returns
    -------
    MollifiedLandscape
    """
    if filter_width <= 0:
        raise ConfigurationError(f"filter_width must be > 0, got {filter_width}")
    if n_grid < 64:
        raise ConfigurationError(f"n_grid must be >= 64, got {n_grid}")
    u_min, u_max, v_min, v_max = (float(b) for b in bounds)
    if u_min >= u_max or v_min >= v_max:
        raise ConfigurationError(f"empty bounds {bounds}")
    margin = BOUNDS_MARGIN_FILTERS * filter_width
    for k, (cu, cv) in enumerate(raw.centers):
        if not (u_min + margin <= cu <= u_max - margin
                and v_min + margin <= cv <= v_max - margin):
            raise ConfigurationError(
                f"bounds {bounds} too tight: well {k} at ({cu}, {cv}) needs "
                f"a {margin:.4g} margin (3 filter widths)")

    us = np.linspace(u_min, u_max, n_grid)
    vs = np.linspace(v_min, v_max, n_grid)
    du = us[1] - us[0]
    dv = vs[1] - vs[0]
    if filter_width < min(du, dv):
        warnings.warn(
            f"filter_width {filter_width:.4g} is below one grid cell "
            f"({min(du, dv):.4g}); smoothing is resolution-limited",
            stacklevel=2)

    uu, vv = np.meshgrid(us, vs, indexing="ij")
    sampled = raw.evaluate(uu, vv)
    grid = gaussian_filter(sampled, sigma=(filter_width / du, filter_width / dv),
                           mode="nearest", truncate=KERNEL_TRUNCATE)
    grad_u = np.gradient(grid, du, axis=0)
    grad_v = np.gradient(grid, dv, axis=1)

    grad_tol = 10.0 * max(du, dv) * float(raw.weights.max())
    land = MollifiedLandscape(bounds=(u_min, u_max, v_min, v_max),
                              us=us, vs=vs, grid=grid,
                              grad_u=grad_u, grad_v=grad_v,
                              filter_width=filter_width,
                              grad_tol=grad_tol, source=raw)
    fu, gv = land.drift_at(raw.centers[:, 0], raw.centers[:, 1])
    slope = np.hypot(fu, gv)
    if np.any(slope > grad_tol):
        k = int(np.argmax(slope))
        raise ConfigurationError(
            f"smoothed gradient at well {k} is {slope[k]:.3g} > grad_tol "
            f"{grad_tol:.3g}; refine the grid or shrink filter_width")
    return land


def potential_value(land, p):
    """Bilinearly interpolated smoothed potential at point p = (u, v)."""
    return float(land.value_at(p[0], p[1]))


def drift(land, p):
    """Drift (-dF/du, -dF/dv) of the smoothed potential at point p."""
    fu, gv = land.drift_at(p[0], p[1])
    return float(fu), float(gv)


def hessian_dets(raw):
    """Hessian determinant 4*a_k^2 of each well's quadratic branch at its center."""
    return 4.0 * raw.weights ** 2


def limit_measure(raw):
    """Small-noise limit weights of the stationary measure, one per well.

    Weight k is proportional to the reciprocal Hessian determinant
    1 / (4 a_k^2), normalized to sum to 1.
    """
    inv = 1.0 / hessian_dets(raw)
    return LimitMeasure(weights=inv / inv.sum())


@dataclass(frozen=True)
class LimitMeasure:
    """Normalized reciprocal-determinant weights over the wells."""

    weights: np.ndarray


def classify_basin(raw, p):
    """Index of the basin containing p; ties break to the lowest index."""
    return int(raw.classify(p[0], p[1]))


def weights_from_counts(counts, convention="half-inverse-sqrt"):
    """Derive well weights a_k from per-well arrival counts c_k.

    Two conventions are supported: ``"reciprocal"`` gives a_k = 1/c_k and
    ``"half-inverse-sqrt"`` gives a_k = 1/(2 sqrt(c_k)), which makes the
    limit-measure weight of well k proportional to c_k.
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts <= 0):
        raise ConfigurationError("counts must be positive")
    if convention == "reciprocal":
        return 1.0 / counts
    if convention == "half-inverse-sqrt":
        return 1.0 / (2.0 * np.sqrt(counts))
    raise ConfigurationError(f"unknown count convention {convention!r}")
