"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, runtime aborts (NaN, domain escape) with 3.
"""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bad wells, bounds, keys...)."""


class OutOfDomainError(ValueError):
    """A point fell outside the mollified landscape's bounds."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainEscapeError(RuntimeError):
    """A trajectory left the landscape bounds; records time and node."""

    def __init__(self, t, node, trajectory=None):
        self.t = t
        self.node = node
        self.trajectory = trajectory
        where = f"node {node} at t={t:.6g}"
        if trajectory is not None:
            where += f" (trajectory {trajectory})"
        super().__init__(
            f"state escaped the landscape bounds at {where}; "
            "widen landscape.bounds or reduce sigma"
        )


class NanAbortError(RuntimeError):
    """Non-finite state detected while stepping."""

    def __init__(self, step, trajectory=None):
        self.step = step
        self.trajectory = trajectory
        msg = f"non-finite state at step {step}"
        if trajectory is not None:
            msg += f" (trajectory {trajectory})"
        super().__init__(msg)


class NonEmbeddableKernelError(ValueError):
    """Circulant embedding produced an eigenvalue below -clip_tol."""

    def __init__(self, min_eigenvalue, clip_tol):
        self.min_eigenvalue = min_eigenvalue
        self.clip_tol = clip_tol
        super().__init__(
            f"circulant embedding has eigenvalue {min_eigenvalue:.3e} "
            f"below -clip_tol={-clip_tol:.3e}; kernel is not embeddable "
            "on this grid"
        )
