"""Solver configuration and fit results."""

from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ValidationError

_WEIGHTS = (
    "alpha", "beta", "lam", "lambda_x", "lambda_y", "lambda1", "lambda2",
    "lambda_a", "lambda_b", "lambda_l", "delta", "gamma",
)


@dataclass(frozen=True)
class ModelConfig:
    """Rank, regularization weights and iteration controls.

    Library fit functions read ``rank``, ``alpha``/``beta`` and the iteration
    settings; the remaining weights are carried here so a single config can
    describe any CLI run, and are copied into problem objects by the caller.
    """

    rank: int = 5
    alpha: float = 0.0
    beta: float = 0.0
    max_iter: int = 1000
    rel_tol: float = 1e-8
    seed: int = 0
    step_init: float = 1.0
    step_shrink: float = 0.5
    eps_floor: float = 1e-12
    # weights for the extended models
    lam: float = 1.0
    lambda_x: float = 0.0
    lambda_y: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda_a: float = 0.0
    lambda_b: float = 0.0
    lambda_l: float = 0.0
    delta: float = 0.0
    gamma: float = 1e-3

    def __post_init__(self):
        if int(self.rank) != self.rank or self.rank < 1:
            raise ValidationError("rank must be a positive integer")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if not self.rel_tol >= 0:
            raise ValidationError("rel_tol must be >= 0")
        if not 0 < self.step_shrink < 1:
            raise ValidationError("step_shrink must lie in (0, 1)")
        if not self.step_init > 0:
            raise ValidationError("step_init must be positive")
        if not self.eps_floor > 0:
            raise ValidationError("eps_floor must be positive")
        for name in _WEIGHTS:
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be a finite non-negative number")

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return ModelConfig(**data)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class FitResult:
    """Outcome of a fit.

    ``objective_history[0]`` is the objective at initialization, so
    ``iterations == len(objective_history) - 1``.  ``diagnostics`` holds
    per-iteration series aligned with ``objective_history`` (KKT residual,
    orthogonality gaps); ``extras`` holds scalar or array end-of-run metrics.
    """

    factors: dict
    objective_history: list
    converged: bool
    kkt_residual: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.objective_history) - 1

    @property
    def objective(self):
        return self.objective_history[-1]

    def __getitem__(self, name):
        return self.factors[name]
