"""Observables computed on recorded trajectories.

Spatial integrals use the trapezoidal rule on the node values extended to
the domain edges (replicating the end nodes under Neumann conditions,
wrapping under periodic ones), so integrals of constants are exact.  The
spatial L2-average pair (the quantity whose stationary spread scales with
the noise amplitude) is

    Avg u(t) = sqrt( (1/L) * integral |u(t, x)|^2 dx ),

while basin classification uses the plain spatial-mean point (the L2
average loses signs and cannot serve as a state-space coordinate).
"""

from dataclasses import dataclass, field

import numpy as np


def trapezoid_weights(n, h, bc):
    """Quadrature weights over the full domain for n node values."""
    if bc == "periodic":
        return np.full(n, h)
    if n == 1:
        return np.array([2.0 * h])
    w = np.full(n, h)
    w[0] = w[-1] = 1.5 * h
    return w


def integrate_profiles(arr, h, bc):
    """Integral over the domain along the last axis of (..., n) values.

    Row-wise pairwise summation keeps the result bit-identical whether a
    profile is reduced alone or inside a batch.
    """
    w = trapezoid_weights(arr.shape[-1], h, bc)
    return (arr * w).sum(axis=-1)


def spatial_mean_profiles(arr, h, bc):
    w = trapezoid_weights(arr.shape[-1], h, bc)
    return (arr * w).sum(axis=-1) / w.sum()


def l2_average_profiles(arr, h, bc):
    w = trapezoid_weights(arr.shape[-1], h, bc)
    return np.sqrt((arr * arr * w).sum(axis=-1) / w.sum())


def l2_average(state, h):
    """L2-average pair (Avg u, Avg v) of one field state."""
    return (float(l2_average_profiles(state.u, h, state.bc)),
            float(l2_average_profiles(state.v, h, state.bc)))


@dataclass
class Trajectory:
    """Recorded time series of one run.

    ``us``/``vs`` hold the full field snapshots (n_records, n_nodes) when
    the run stored states; the average, mean and basin series are always
    present.
    """

    times: np.ndarray
    avg_u: np.ndarray
    avg_v: np.ndarray
    mean_u: np.ndarray
    mean_v: np.ndarray
    basins: np.ndarray
    h: float
    bc: str
    us: np.ndarray = field(default=None, repr=False)
    vs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("record times must be strictly increasing")
        n = len(self.times)
        for name in ("avg_u", "avg_v", "mean_u", "mean_v", "basins"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"series {name} length does not match times")

    @property
    def n_records(self):
        return len(self.times)

    def state(self, i):
        """FieldState at record i (requires stored states)."""
        if self.us is None:
            raise ValueError("trajectory was recorded without states")
        from .solver import FieldState
        return FieldState(t=float(self.times[i]), u=self.us[i], v=self.vs[i],
                          bc=self.bc)


@dataclass(frozen=True)
class TransitionEvent:
    """First confirmed departure from a basin."""

    t_exit: float
    from_basin: int
    to_basin: int
    dwell_confirmed: bool


@dataclass(frozen=True)
class OccupationReport:
    """Fraction of records classified into each well over [0, T]."""

    fractions: np.ndarray
    horizon: float


def classify_series(traj, raw):
    """Basin of the spatial-mean point at every record."""
    if traj.us is not None:
        mu = spatial_mean_profiles(traj.us, traj.h, traj.bc)
        mv = spatial_mean_profiles(traj.vs, traj.h, traj.bc)
    else:
        mu, mv = traj.mean_u, traj.mean_v
    return raw.classify(mu, mv)


def first_exit(traj, from_basin, dwell_steps=10):
    """Earliest record where the basin leaves ``from_basin`` and stays away.

    The departure must persist for ``dwell_steps`` consecutive records to
    be confirmed; a departure still in progress when the recording ends is
    returned with ``dwell_confirmed=False``.  Returns None if the
    trajectory never leaves (or always returns within the dwell window).
    """
    b = np.asarray(traj.basins)
    if b[0] != from_basin:
        raise ValueError(
            f"trajectory starts in basin {int(b[0])}, not {from_basin}")
    run = 0
    start = None
    for i, basin in enumerate(b):
        if basin != from_basin:
            run += 1
            if run == 1:
                start = i
            if run == dwell_steps:
                return TransitionEvent(t_exit=float(traj.times[start]),
                                       from_basin=from_basin,
                                       to_basin=int(b[start]),
                                       dwell_confirmed=True)
        else:
            run = 0
    if run > 0:
        return TransitionEvent(t_exit=float(traj.times[start]),
                               from_basin=from_basin,
                               to_basin=int(b[start]),
                               dwell_confirmed=False)
    return None


def occupation(traj, horizon, n_wells=None):
    """Occupation fractions of each well over records with t <= horizon."""
    if horizon > traj.times[-1] + 1e-12:
        raise ValueError(
            f"horizon {horizon} exceeds trajectory end {traj.times[-1]}")
    sel = traj.basins[traj.times <= horizon + 1e-12]
    if n_wells is None:
        n_wells = int(sel.max()) + 1
    counts = np.bincount(sel, minlength=n_wells)
    return OccupationReport(fractions=counts / len(sel), horizon=float(horizon))


def _run_lengths(series):
    series = np.asarray(series)
    change = np.nonzero(np.diff(series))[0] + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [len(series)]))
    return [(int(series[s]), int(e - s)) for s, e in zip(starts, ends)]


def transition_sequence(traj, dwell_steps=10):
    """Debounced sequence of visited basins, in time order.

    A basin counts as visited when the classification stays there for
    ``dwell_steps`` consecutive records; the starting basin always counts.
    """
    runs = _run_lengths(traj.basins)
    seq = [runs[0][0]]
    for basin, length in runs[1:]:
        if length >= dwell_steps and basin != seq[-1]:
            seq.append(basin)
    return seq


@dataclass(frozen=True)
class StationaryHistogram:
    """Pooled post-burn-in distribution of the L2-average pair."""

    counts_u: np.ndarray
    edges_u: np.ndarray
    counts_v: np.ndarray
    edges_v: np.ndarray
    mean_u: float
    std_u: float
    mean_v: float
    std_v: float
    n_samples: int
    traj_means_u: np.ndarray
    traj_means_v: np.ndarray


def stationary_histogram(trajs, burn_in, bins=60):
    """Pool Avg samples after ``burn_in`` across an ensemble of trajectories."""
    pooled_u, pooled_v, tm_u, tm_v = [], [], [], []
    for traj in trajs:
        keep = traj.times > burn_in
        if np.any(keep):
            pooled_u.append(traj.avg_u[keep])
            pooled_v.append(traj.avg_v[keep])
            tm_u.append(traj.avg_u[keep].mean())
            tm_v.append(traj.avg_v[keep].mean())
    if not pooled_u:
        raise ValueError(f"no records after burn_in={burn_in}")
    pu = np.concatenate(pooled_u)
    pv = np.concatenate(pooled_v)
    counts_u, edges_u = np.histogram(pu, bins=bins)
    counts_v, edges_v = np.histogram(pv, bins=bins)
    ddof = 1 if len(pu) > 1 else 0
    return StationaryHistogram(
        counts_u=counts_u, edges_u=edges_u,
        counts_v=counts_v, edges_v=edges_v,
        mean_u=float(pu.mean()), std_u=float(pu.std(ddof=ddof)),
        mean_v=float(pv.mean()), std_v=float(pv.std(ddof=ddof)),
        n_samples=len(pu),
        traj_means_u=np.array(tm_u), traj_means_v=np.array(tm_v))
