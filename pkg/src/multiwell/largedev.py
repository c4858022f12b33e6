"""Quasi-potential barriers, path action, and exit-time asymptotics.

The energy of a profile phi = (u(x), v(x)) is

    U(phi) = integral over the domain of
             1/2 * [d1 (du/dx)^2 + d2 (dv/dx)^2] + F(u(x), v(x)),

whose minima are the spatially constant profiles sitting at the well
centers.  Over constant profiles U reduces to |O| * F, so the barrier out
of a basin is |O| times the gap between the smoothed potential's minimum
on the basin boundary (the saddle) and its value at the well center.  The
mean first-exit time then scales like exp(2 * barrier / sigma^2), which
``exit_rate_fit`` checks by regressing log mean exit times against
1/sigma^2 across an ensemble.
"""

from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import first_exit  # noqa: F401  (re-exported convenience)
from .diagnostics import integrate_profiles, spatial_mean_profiles, trapezoid_weights
from .errors import ConfigurationError, NanAbortError
from .noise import sample_increment_block, stream
from .solver import NOISE_BLOCK, Stepper, apply_neg_laplacian

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuasiPotentialReport:
    """Barrier between two basins over constant-in-space profiles."""

    U_min_per_well: np.ndarray
    saddle_value: float
    barrier: float
    saddle_point: tuple
    from_well: int
    to_well: int


@dataclass(frozen=True)
class ExitStudy:
    """Monte Carlo exit times across noise amplitudes and the slope fit."""

    sigmas: np.ndarray
    mean_exit: np.ndarray
    censoring: np.ndarray
    n_traj: int
    fitted_slope: float
    predicted_slope: float
    report: QuasiPotentialReport
    unreliable: bool
    exit_times: list


def quasi_potential(profile, land, disc):
    """Trapezoidal quadrature of the profile's energy.

    Spatial derivatives are centered inside and one-sided at Neumann ends
    (wrapped under periodic conditions); the potential term interpolates
    the smoothed landscape, so out-of-bounds profiles raise.
    """
    u = np.asarray(profile.u, dtype=float)
    v = np.asarray(profile.v, dtype=float)
    h = disc.h
    if disc.bc == "periodic":
        du = (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
        dv = (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)
    else:
        du = np.gradient(u, h, edge_order=1)
        dv = np.gradient(v, h, edge_order=1)
    integrand = 0.5 * (disc.d1 * du**2 + disc.d2 * dv**2) + land.value_at(u, v)
    return float(integrate_profiles(integrand, h, disc.bc))


def _golden_min(fn, tol):
    """Golden-section minimum of fn on [0, 1]."""
    a, b = 0.0, 1.0
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    s = (a + b) / 2
    return s, fn(s)


def _boundary_midpoints(land, k, j):
    raw = land.source
    uu, vv = np.meshgrid(land.us, land.vs, indexing="ij")
    labels = raw.classify(uu, vv)
    mus, mvs = [], []
    lo, hi = labels[:-1, :], labels[1:, :]
    iu, iv = np.nonzero(((lo == k) & (hi == j)) | ((lo == j) & (hi == k)))
    mus.append((land.us[iu] + land.us[iu + 1]) / 2)
    mvs.append(land.vs[iv])
    lo, hi = labels[:, :-1], labels[:, 1:]
    iu, iv = np.nonzero(((lo == k) & (hi == j)) | ((lo == j) & (hi == k)))
    mus.append(land.us[iu])
    mvs.append((land.vs[iv] + land.vs[iv + 1]) / 2)
    mu = np.concatenate(mus)
    mv = np.concatenate(mvs)
    if len(mu) == 0:
        raise ConfigurationError(
            f"wells {k} and {j} share no basin boundary on the grid")
    return mu, mv, labels


def barrier(land, from_well, to_well, domain_length=1.0):
    """Scan the k/j basin boundary for the saddle and refine it locally.

    The classification boundary between the two basins is collected as
    grid-edge midpoints, the smoothed potential is minimized over them,
    and the minimum is refined by golden-section search along segments
    joining the best midpoint to its nearest boundary neighbors.
    """
    raw = land.source
    n_wells = raw.n_wells
    if not (0 <= from_well < n_wells and 0 <= to_well < n_wells):
        raise ConfigurationError("well index out of range")
    if from_well == to_well:
        raise ConfigurationError("from_well and to_well must differ")
    mu, mv, labels = _boundary_midpoints(land, from_well, to_well)
    F = land.value_at(mu, mv)
    i0 = int(np.argmin(F))
    p0 = np.array([mu[i0], mv[i0]])
    best_F, best_p = float(F[i0]), p0

    cell = min(land.cell)
    d2 = (mu - p0[0]) ** 2 + (mv - p0[1]) ** 2
    for idx in np.argsort(d2)[1:5]:
        q = np.array([mu[idx], mv[idx]])
        seg = np.linalg.norm(q - p0)
        if seg == 0:
            continue

        def along(s):
            p = p0 + s * (q - p0)
            return float(land.value_at(p[0], p[1]))

        s, val = _golden_min(along, tol=1e-3 * cell / seg)
        if val < best_F:
            best_F = val
            best_p = p0 + s * (q - p0)

    du, dv = land.cell
    iu = int(np.clip((best_p[0] - land.us[0]) / du, 0, len(land.us) - 2))
    iv = int(np.clip((best_p[1] - land.vs[0]) / dv, 0, len(land.vs) - 2))
    corner_labels = labels[iu:iu + 2, iv:iv + 2]
    if len(np.unique(corner_labels)) < 2:
        raise RuntimeError(
            f"refined saddle {tuple(best_p)} drifted off the basin boundary")

    U_min = domain_length * np.asarray(
        land.value_at(raw.centers[:, 0], raw.centers[:, 1]), dtype=float)
    saddle_value = domain_length * best_F
    gap = saddle_value - U_min[from_well]
    if gap < -1e-9 * max(1.0, abs(saddle_value)):
        raise RuntimeError(
            f"negative barrier {gap:.3e}: smoothing has merged the basins")
    return QuasiPotentialReport(U_min_per_well=U_min,
                                saddle_value=float(saddle_value),
                                barrier=float(max(gap, 0.0)),
                                saddle_point=(float(best_p[0]), float(best_p[1])),
                                from_well=from_well, to_well=to_well)


def min_barrier(land, from_well, domain_length=1.0):
    """Lowest barrier out of a basin over all adjacent wells."""
    best = None
    for j in range(land.source.n_wells):
        if j == from_well:
            continue
        try:
            rep = barrier(land, from_well, j, domain_length)
        except ConfigurationError:
            continue
        if best is None or rep.barrier < best.barrier:
            best = rep
    if best is None:
        raise ConfigurationError(
            f"well {from_well} shares no boundary with any other well")
    return best


def action_functional(path, land, disc):
    """Discrete action of a recorded path against the drift equation.

    Residuals use forward time differences between records, the solver's
    centered-difference Laplacian and the interpolated landscape drift;
    integration is trapezoidal in space and rectangle rule in time.  The
    action vanishes (to O(dt)) exactly on deterministic solution paths.
    """
    if path.us is None:
        raise ConfigurationError("action requires a path recorded with states")
    if path.n_records < 2:
        raise ConfigurationError("action requires at least 2 records")
    steps = np.diff(path.times)
    dt_rec = steps[0]
    if np.any(np.abs(steps - dt_rec) > 1e-9 * dt_rec):
        raise ConfigurationError("action requires a uniformly recorded path")
    us, vs = path.us, path.vs
    dudt = np.diff(us, axis=0) / dt_rec
    dvdt = np.diff(vs, axis=0) / dt_rec
    fu, gv = land.drift_at(us[:-1], vs[:-1])
    res_u = dudt + disc.d1 * apply_neg_laplacian(us[:-1], disc.bc, disc.h) - fu
    res_v = dvdt + disc.d2 * apply_neg_laplacian(vs[:-1], disc.bc, disc.h) - gv
    space = integrate_profiles(res_u**2 + res_v**2, disc.h, disc.bc)
    return float(0.5 * np.sum(space * dt_rec))


def _exit_times_one_sigma(cfg, n_traj, master_seed, sigma_index, from_well,
                          dwell_steps):
    """Confirmed first-exit times for one noise level, batched with early stop.

    Each trajectory consumes its stream in the same fixed-size blocks as
    ``simulate``, so the exit time of lane i equals what
    ``first_exit(simulate(cfg, stream(seed, sigma_index, i)), ...)`` finds.
    """
    disc = cfg.disc
    dt = disc.dt
    stride = cfg.record_stride
    n_steps = int(round(cfg.t_end / dt))
    raw = cfg.landscape.source
    state0 = cfg.initial_state()

    gens = [stream(master_seed, sigma_index, i) for i in range(n_traj)]
    u = np.tile(state0.u, (n_traj, 1))
    v = np.tile(state0.v, (n_traj, 1))
    active = np.arange(n_traj)
    run = np.zeros(n_traj, dtype=int)
    run_start = np.zeros(n_traj)
    exit_t = np.full(n_traj, np.nan)
    stepper = Stepper(cfg)

    step = 0
    while step < n_steps and len(active):
        block = min(NOISE_BLOCK, n_steps - step)
        draws = [sample_increment_block(cfg.noise, dt, gens[i], block)
                 for i in active]
        dW1 = np.stack([d[0] for d in draws], axis=1)
        dW2 = np.stack([d[1] for d in draws], axis=1)
        done = np.zeros(len(active), dtype=bool)
        for b in range(block):
            u, v = stepper.advance(step * dt, u, v, dW1[b], dW2[b])
            step += 1
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NanAbortError(step=step)
            if step % stride == 0:
                t_rec = step * dt
                mu = spatial_mean_profiles(u, disc.h, disc.bc)
                mv = spatial_mean_profiles(v, disc.h, disc.bc)
                away = raw.classify(mu, mv) != from_well
                lanes = active
                fresh = away & (run[lanes] == 0)
                run_start[lanes[fresh]] = t_rec
                run[lanes] = np.where(away, run[lanes] + 1, 0)
                confirmed = (run[lanes] == dwell_steps) & ~done
                if np.any(confirmed):
                    exit_t[lanes[confirmed]] = run_start[lanes[confirmed]]
                    done |= confirmed
        if np.any(done):
            keep = ~done
            active = active[keep]
            u = u[keep]
            v = v[keep]
    return exit_t


def exit_rate_fit(cfg, sigmas, n_traj, master_seed, dwell_steps=10):
    """Fit log mean exit time against 1/sigma^2 and compare to 2*barrier.

    For each sigma, ``n_traj`` trajectories start from the configured
    initial condition and run until their first confirmed exit (or until
    t_end, in which case they only count toward the censoring fraction;
    censoring above 10% at any sigma flags the study as unreliable).
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if len(sigmas) < 3:
        raise ConfigurationError("exit study needs at least 3 sigma values")
    if np.any(sigmas <= 0):
        raise ConfigurationError("exit study sigmas must be positive")
    if n_traj < 20:
        raise ConfigurationError("exit study needs at least 20 trajectories per sigma")

    state0 = cfg.initial_state()
    raw = cfg.landscape.source
    mu0 = spatial_mean_profiles(state0.u, cfg.disc.h, cfg.disc.bc)
    mv0 = spatial_mean_profiles(state0.v, cfg.disc.h, cfg.disc.bc)
    from_well = int(raw.classify(mu0, mv0))
    report = min_barrier(cfg.landscape, from_well, cfg.disc.domain_length)

    mean_exit = np.full(len(sigmas), np.nan)
    censoring = np.zeros(len(sigmas))
    exit_times = []
    for s_idx, sigma in enumerate(sigmas):
        cfg_s = replace(cfg, sigma=float(sigma))
        taus = _exit_times_one_sigma(cfg_s, n_traj, master_seed, s_idx,
                                     from_well, dwell_steps)
        confirmed = taus[np.isfinite(taus)]
        exit_times.append(confirmed)
        censoring[s_idx] = 1.0 - len(confirmed) / n_traj
        if len(confirmed):
            mean_exit[s_idx] = confirmed.mean()

    valid = np.isfinite(mean_exit) & (mean_exit > 0)
    if np.count_nonzero(valid) >= 2:
        slope = np.polyfit(1.0 / sigmas[valid] ** 2,
                           np.log(mean_exit[valid]), 1)[0]
    else:
        slope = np.nan
    unreliable = bool(np.any(censoring > 0.10) or np.count_nonzero(valid) < len(sigmas))
    return ExitStudy(sigmas=sigmas, mean_exit=mean_exit, censoring=censoring,
                     n_traj=n_traj, fitted_slope=float(slope),
                     predicted_slope=2.0 * report.barrier,
                     report=report, unreliable=unreliable,
                     exit_times=exit_times)
