"""Sampling of spatially correlated Wiener increments on a uniform grid.

Two independent channels are drawn per step from N(0, dt*C), where C has
entries exp(-|x_i - x_j|/l).  The production sampler embeds the first row
of C into a circulant matrix (even circular extension of size 2n), takes
the FFT of that row as the embedding spectrum, and synthesizes draws by
scaling complex standard normals with sqrt(spectrum * dt / size) and
transforming back; the real and imaginary parts give the two channels.
A dense Cholesky sampler is kept alongside as a distributional oracle,
and a white-noise mode (covariance (dt/h) * I) approximates space-time
white noise on the same grid.

Reproducibility contract: every trajectory draws from its own generator,
derived from the master seed by a counter-based split (``stream``), so
ensemble results do not depend on scheduling or worker count.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NonEmbeddableKernelError


@dataclass(frozen=True)
class NoiseModel:
    """Precomputed sampling data for one spatial grid."""

    mode: str                    # "qwiener" or "white"
    correlation_length: float    # unused in white mode
    grid: np.ndarray = field(repr=False)
    h: float = 0.0
    spectrum: np.ndarray = field(repr=False, default=None)
    clip_count: int = 0
    cov: np.ndarray = field(repr=False, default=None)

    @property
    def n_points(self):
        return len(self.grid)


@dataclass(frozen=True)
class NoiseIncrement:
    """One step's worth of increments for the two channels."""

    dW1: np.ndarray
    dW2: np.ndarray
    dt: float


def _grid_spacing(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1:
        raise ConfigurationError("grid must be a non-empty 1-D array")
    if len(grid) == 1:
        return grid, 1.0
    steps = np.diff(grid)
    h = steps.mean()
    if np.any(np.abs(steps - h) > 1e-9 * max(abs(h), 1.0)):
        raise ConfigurationError("grid must be uniformly spaced")
    return grid, float(h)


def build_noise(l, grid, clip_tol=1e-10):
    """Construct the circulant-embedding sampler for correlation length l.

    The first row of C is extended to an even circulant row of size 2n
    using the wrap-around distance; its FFT is the embedding spectrum.
    Eigenvalues in [-clip_tol * max, 0) are clipped to zero (the
    exponential kernel embeds cleanly, so this is a safety net); anything
    below that raises :class:`NonEmbeddableKernelError`.
    """
    if l <= 0:
        raise ConfigurationError(f"correlation length must be > 0, got {l}")
    grid, h = _grid_spacing(grid)
    n = len(grid)
    size = 2 * n
    m = np.arange(size)
    dist = np.minimum(m, size - m) * h
    row = np.exp(-dist / l)
    spectrum = np.fft.fft(row).real
    floor = -clip_tol * spectrum.max()
    if spectrum.min() < floor:
        raise NonEmbeddableKernelError(float(spectrum.min()), -floor)
    clip_count = int(np.count_nonzero(spectrum < 0))
    spectrum = np.maximum(spectrum, 0.0)
    cov = np.exp(-np.abs(grid[:, None] - grid[None, :]) / l)
    return NoiseModel(mode="qwiener", correlation_length=float(l), grid=grid,
                      h=h, spectrum=spectrum, clip_count=clip_count, cov=cov)


def white_noise(grid):
    """Discrete-delta kernel: channel covariance (dt/h) * Identity."""
    grid, h = _grid_spacing(grid)
    cov = np.eye(len(grid)) / h
    return NoiseModel(mode="white", correlation_length=0.0, grid=grid, h=h,
                      cov=cov)


def sample_increment_block(model, dt, rng, n_steps):
    """Draw ``n_steps`` consecutive increments for both channels.

    Returns (dW1, dW2), each of shape ``(n_steps, n_points)``.  A single
    generator call feeds the whole block, so any run that consumes blocks
    of the same size reproduces the same increments from the same stream.
    """
    if dt < 0:
        raise ConfigurationError(f"dt must be >= 0, got {dt}")
    n = model.n_points
    if model.mode == "white":
        draws = rng.standard_normal((n_steps, 2, n)) * np.sqrt(dt / model.h)
        return draws[:, 0, :], draws[:, 1, :]
    size = len(model.spectrum)
    draws = rng.standard_normal((n_steps, 2, size))
    z = (draws[:, 0, :] + 1j * draws[:, 1, :]) * np.sqrt(model.spectrum * dt / size)
    w = np.fft.fft(z, axis=-1)
    return np.ascontiguousarray(w.real[:, :n]), np.ascontiguousarray(w.imag[:, :n])


def sample_increment(model, dt, rng):
    """One increment pair drawn from N(0, dt*C) via the embedding spectrum."""
    dW1, dW2 = sample_increment_block(model, dt, rng, 1)
    return NoiseIncrement(dW1=dW1[0], dW2=dW2[0], dt=dt)


def _cholesky_factor(model):
    cov = model.cov
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            return np.linalg.cholesky(cov + 1e-12 * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError(
                "kernel matrix is not positive definite even with 1e-12 jitter")


def cholesky_oracle_block(model, dt, rng, n_steps):
    """Reference sampler: same distribution via the dense lower factor of C."""
    factor = _cholesky_factor(model)
    n = model.n_points
    draws = rng.standard_normal((n_steps, 2, n)) * np.sqrt(dt)
    dW = draws @ factor.T
    return dW[:, 0, :], dW[:, 1, :]


def cholesky_oracle(model, dt, rng):
    """One increment pair from the dense Cholesky factorization of dt*C."""
    dW1, dW2 = cholesky_oracle_block(model, dt, rng, 1)
    return NoiseIncrement(dW1=dW1[0], dW2=dW2[0], dt=dt)


def stream(master_seed, *key):
    """Generator for one unit of work, split from the master seed.

    ``stream(seed, i)`` is the stream of trajectory ``i``; studies that
    sweep a parameter use ``stream(seed, param_index, i)``.  The split is
    a pure function of (seed, key), so results merge order-independently.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
