"""Semi-implicit Euler-Maruyama stepping of the two-field system.

Space is discretized on (0, L) with the centered-difference negative
Laplacian A (Neumann interior nodes x_1..x_{J-1}, or periodic nodes
x_0..x_{J-1}); the stiff diffusion is treated implicitly and the landscape
drift plus noise explicitly:

    u_{n+1} = (I + dt*d1*A)^{-1} [u_n + f(u_n, v_n)*dt + sigma*dW1_n]
    v_{n+1} = (I + dt*d2*A)^{-1} [v_n + g(u_n, v_n)*dt + sigma*dW2_n]

The implicit operators are prefactorized once (banded Cholesky for
Neumann, FFT diagonalization for periodic).  ``simulate`` advances one
trajectory; ``simulate_ensemble`` advances many in lockstep on stacked
arrays, each drawing from its own noise stream, and produces results
bit-identical to running the same trajectories one at a time.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from . import diagnostics
from .errors import ConfigurationError, DomainEscapeError, NanAbortError, OutOfDomainError
from .noise import sample_increment_block, stream

# Steps of noise drawn per generator call; fixed so that any execution
# strategy consumes per-trajectory streams identically.
NOISE_BLOCK = 256
# One implicit-solve residual is verified every this many steps.
RESIDUAL_CHECK_EVERY = 100
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Discretization:
    """Grid, boundary condition, diffusion constants and factored solves."""

    J: int
    bc: str
    d1: float
    d2: float
    dt: float
    domain_length: float
    h: float
    x: np.ndarray = field(repr=False)            # node positions
    _chol: tuple = field(repr=False, default=None)    # Neumann: banded factors
    _eig: tuple = field(repr=False, default=None)     # periodic: rfft denominators

    @property
    def n_nodes(self):
        return len(self.x)


def neg_laplacian_dense(J, bc, h):
    """Dense centered-difference matrix for minus the second derivative."""
    if bc == "neumann":
        n = J - 1
        A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
             - np.diag(np.ones(n - 1), -1))
        A[0, 0] = 1.0   # reflected ghost node
        A[-1, -1] = 1.0
    elif bc == "periodic":
        n = J
        A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
             - np.diag(np.ones(n - 1), -1))
        A[0, -1] = -1.0
        A[-1, 0] = -1.0
    else:
        raise ConfigurationError(f"unknown boundary condition {bc!r}")
    return A / h**2


def apply_neg_laplacian(arr, bc, h):
    """Stencil application of the same operator to (..., n) arrays."""
    out = 2.0 * arr
    out[..., :-1] -= arr[..., 1:]
    out[..., 1:] -= arr[..., :-1]
    if bc == "neumann":
        out[..., 0] -= arr[..., 0]
        out[..., -1] -= arr[..., -1]
    else:
        out[..., 0] -= arr[..., -1]
        out[..., -1] -= arr[..., 0]
    return out / h**2


def build_discretization(J, bc="neumann", d1=1.0, d2=1.0, dt=1e-3,
                         domain_length=1.0):
    """Assemble the grid and prefactor (I + dt*d*A) for both channels.

    Diffusion constants may be zero, which reduces the implicit solve to
    the identity (useful for noise-injection diagnostics).
    """
    if J < 4:
        raise ConfigurationError(f"J must be >= 4, got {J}")
    if dt <= 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    if d1 < 0 or d2 < 0:
        raise ConfigurationError("diffusion constants must be >= 0")
    if domain_length <= 0:
        raise ConfigurationError("domain_length must be > 0")
    if bc not in ("neumann", "periodic"):
        raise ConfigurationError(f"unknown boundary condition {bc!r}")
    h = domain_length / J
    if bc == "neumann":
        x = h * np.arange(1, J)
        n = J - 1
        factors = []
        for d in (d1, d2):
            ab = np.zeros((2, n))
            ab[1] = 1.0 + dt * d * 2.0 / h**2
            ab[1, 0] = ab[1, -1] = 1.0 + dt * d / h**2
            ab[0, 1:] = -dt * d / h**2
            factors.append(sla.cholesky_banded(ab, check_finite=False))
        return Discretization(J=J, bc=bc, d1=d1, d2=d2, dt=dt,
                              domain_length=domain_length, h=h, x=x,
                              _chol=tuple(factors))
    x = h * np.arange(J)
    k = np.arange(J // 2 + 1)
    lam = (2.0 - 2.0 * np.cos(2.0 * np.pi * k / J)) / h**2
    denom = tuple(1.0 + dt * d * lam for d in (d1, d2))
    return Discretization(J=J, bc=bc, d1=d1, d2=d2, dt=dt,
                          domain_length=domain_length, h=h, x=x, _eig=denom)


def solve_implicit(disc, channel, b):
    """Solve (I + dt*d*A) x = b along the last axis of b."""
    if disc.bc == "neumann":
        cb = disc._chol[channel]
        flat = np.reshape(b, (-1, b.shape[-1]))
        x = sla.cho_solve_banded((cb, False), flat.T, check_finite=False).T
        return x.reshape(b.shape)
    spec = np.fft.rfft(b, axis=-1) / disc._eig[channel]
    return np.fft.irfft(spec, n=disc.J, axis=-1)


@dataclass(frozen=True)
class FieldState:
    """The two field vectors at one time."""

    t: float
    u: np.ndarray
    v: np.ndarray
    bc: str = "neumann"

    def __post_init__(self):
        if self.u.shape != self.v.shape:
            raise ConfigurationError("u and v must have the same shape")


@dataclass(frozen=True)
class SimConfig:
    """Everything one trajectory needs.

    ``initial_condition`` is a constant (u0, v0) pair or a pair of
    per-node arrays.  ``forcing``, if given, is called as
    ``forcing(t, x, u, v)`` and must return an additive drift pair
    broadcastable to the state; it is a hook for external control laws.
    """

    landscape: object
    noise: object
    disc: Discretization
    sigma: float
    t_end: float
    record_stride: int = 10
    initial_condition: tuple = (0.0, 0.0)
    forcing: object = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError(f"sigma must be >= 0, got {self.sigma}")
        if self.t_end < 0:
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        src = getattr(self.landscape, "source", None)
        if src is not None:
            stiff = 2.0 * float(src.weights.max()) * self.disc.dt
            if stiff > 0.5:
                warnings.warn(
                    f"dt*2*max(a_k) = {stiff:.3g} > 0.5; the explicit drift "
                    "step may be unstable, reduce dt", stacklevel=2)

    def initial_state(self):
        n = self.disc.n_nodes
        u0, v0 = self.initial_condition
        u = np.full(n, float(u0)) if np.ndim(u0) == 0 else np.asarray(u0, dtype=float).copy()
        v = np.full(n, float(v0)) if np.ndim(v0) == 0 else np.asarray(v0, dtype=float).copy()
        if u.shape != (n,) or v.shape != (n,):
            raise ConfigurationError(
                f"initial condition must be scalar or length-{n} vectors")
        return FieldState(t=0.0, u=u, v=v, bc=self.disc.bc)


class Stepper:
    """Advances stacked states (..., n) one step at a time."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.disc = cfg.disc
        self.land = cfg.landscape
        self._count = 0

    def drift(self, t, u, v):
        try:
            fu, gv = self.land.drift_at(u, v)
        except OutOfDomainError as err:
            flat = err.index if err.index is not None else 0
            node = flat % u.shape[-1]
            traj = flat // u.shape[-1] if u.ndim > 1 else None
            raise DomainEscapeError(t=t, node=node, trajectory=traj) from err
        if self.cfg.forcing is not None:
            eu, ev = self.cfg.forcing(t, self.disc.x, u, v)
            fu = fu + eu
            gv = gv + ev
        return fu, gv

    def advance(self, t, u, v, dW1=None, dW2=None):
        dt = self.disc.dt
        fu, gv = self.drift(t, u, v)
        bu = u + dt * fu
        bv = v + dt * gv
        if dW1 is not None:
            bu += self.cfg.sigma * dW1
            bv += self.cfg.sigma * dW2
        u2 = solve_implicit(self.disc, 0, bu)
        v2 = solve_implicit(self.disc, 1, bv)
        self._count += 1
        if self._count % RESIDUAL_CHECK_EVERY == 0:
            self._check_residual(u2, bu, self.disc.d1)
            self._check_residual(v2, bv, self.disc.d2)
        return u2, v2

    def _check_residual(self, x, b, d):
        res = x + self.disc.dt * d * apply_neg_laplacian(x, self.disc.bc, self.disc.h) - b
        worst = float(np.max(np.abs(res)))
        if worst > RESIDUAL_TOL:
            raise RuntimeError(
                f"implicit solve residual {worst:.3e} exceeds {RESIDUAL_TOL}")


def pull_toward(center, gain):
    """Constant-in-space forcing nudging the spatial mean toward a point.

    A crude stand-in for an external control law: the same corrective
    drift gain*(center - mean state) is applied at every node.  No
    optimality is claimed.
    """
    cu, cv = float(center[0]), float(center[1])

    def forcing(t, x, u, v):
        mu = np.mean(u, axis=-1, keepdims=True)
        mv = np.mean(v, axis=-1, keepdims=True)
        return gain * (cu - mu), gain * (cv - mv)

    return forcing


def em_step(state, cfg, inc):
    """One semi-implicit Euler-Maruyama step from ``state``.

    The increment's dt must match the discretization's dt.
    """
    if abs(inc.dt - cfg.disc.dt) > 1e-15:
        raise ConfigurationError(
            f"increment dt {inc.dt} does not match solver dt {cfg.disc.dt}")
    stepper = Stepper(cfg)
    u, v = stepper.advance(state.t, state.u, state.v, inc.dW1, inc.dW2)
    return FieldState(t=state.t + cfg.disc.dt, u=u, v=v, bc=state.bc)


def _record_steps(n_steps, stride):
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def simulate(cfg, rng, store_states=True):
    """Run one trajectory to t_end, recording every ``record_stride`` steps.

    Returns a :class:`diagnostics.Trajectory` carrying the recorded states
    (unless ``store_states=False``), the spatial L2-average pair, the
    spatial mean pair and the basin classification per record.  Fully
    deterministic given the generator's state.
    """
    trajs = simulate_ensemble(cfg, rngs=[rng], store_states=store_states)
    return trajs[0]


def simulate_ensemble(cfg, master_seed=None, n_traj=None, indices=None,
                      rngs=None, store_states=False):
    """Advance many trajectories in lockstep, one noise stream each.

    Streams come from ``stream(master_seed, i)`` for each trajectory index
    ``i`` (``indices`` defaults to 0..n_traj-1), or can be passed directly
    via ``rngs``.  Results are a list of trajectories in index order and do
    not depend on how the work is batched.
    """
    if rngs is None:
        if indices is None:
            indices = range(n_traj)
        rngs = [stream(master_seed, int(i)) for i in indices]
    B = len(rngs)
    disc = cfg.disc
    n = disc.n_nodes
    dt = disc.dt
    n_steps = int(round(cfg.t_end / dt))
    rec_steps = _record_steps(n_steps, cfg.record_stride)
    n_rec = len(rec_steps)

    state0 = cfg.initial_state()
    u = np.tile(state0.u, (B, 1))
    v = np.tile(state0.v, (B, 1))
    stepper = Stepper(cfg)
    raw = cfg.landscape.source

    times = np.array([s * dt for s in rec_steps])
    rec_u = np.empty((B, n_rec)) ; rec_v = np.empty((B, n_rec))
    mean_u = np.empty((B, n_rec)); mean_v = np.empty((B, n_rec))
    states_u = np.empty((B, n_rec, n)) if store_states else None
    states_v = np.empty((B, n_rec, n)) if store_states else None

    def record(slot):
        rec_u[:, slot], rec_v[:, slot] = (
            diagnostics.l2_average_profiles(u, disc.h, disc.bc),
            diagnostics.l2_average_profiles(v, disc.h, disc.bc))
        mean_u[:, slot] = diagnostics.spatial_mean_profiles(u, disc.h, disc.bc)
        mean_v[:, slot] = diagnostics.spatial_mean_profiles(v, disc.h, disc.bc)
        if store_states:
            states_u[:, slot] = u
            states_v[:, slot] = v

    record(0)
    next_rec = 1
    step = 0
    while step < n_steps:
        block = min(NOISE_BLOCK, n_steps - step)
        if cfg.sigma > 0:
            per_traj = [sample_increment_block(cfg.noise, dt, g, block) for g in rngs]
            dW1_all = np.stack([p[0] for p in per_traj], axis=1)  # (block, B, n)
            dW2_all = np.stack([p[1] for p in per_traj], axis=1)
        for b in range(block):
            if cfg.sigma > 0:
                u, v = stepper.advance(step * dt, u, v, dW1_all[b], dW2_all[b])
            else:
                u, v = stepper.advance(step * dt, u, v)
            step += 1
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                bad = np.argwhere(~(np.isfinite(u) & np.isfinite(v)))
                raise NanAbortError(step=step, trajectory=int(bad[0][0]))
            if next_rec < n_rec and step == rec_steps[next_rec]:
                record(next_rec)
                next_rec += 1

    basins = raw.classify(mean_u, mean_v) if raw is not None else np.zeros((B, n_rec), dtype=int)
    out = []
    for i in range(B):
        out.append(diagnostics.Trajectory(
            times=times.copy(),
            avg_u=rec_u[i], avg_v=rec_v[i],
            mean_u=mean_u[i], mean_v=mean_v[i],
            basins=basins[i],
            h=disc.h, bc=disc.bc,
            us=states_u[i] if store_states else None,
            vs=states_v[i] if store_states else None))
    return out
