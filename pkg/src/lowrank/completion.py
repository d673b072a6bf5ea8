"""Matrix completion from a partially observed matrix.

Only entries with ``O(i,j) = 1`` enter the data term:

    ||O ∘ (X - UVᵀ)||_F² + alpha ||U||_F² + beta ||V||_F²

Values of ``X`` at unobserved positions are placeholders and never influence
any computation.  Gradients are written with the ``O ∘ O`` weight so the same
code would serve real-valued weights; for binary masks it equals ``O``.

Two solvers are provided: alternating gradient descent (signed factors) and
the multiplicative non-negative rule

    U ← U ∘ sqrt( ((O∘X) V) / ((O∘UVᵀ) V + alpha U) )

(and symmetrically for V), obtained by putting the negative-sign terms of the
masked gradient in the numerator and the positive-sign ones in the
denominator.
"""

from dataclasses import dataclass

import numpy as np

from . import _loop, nmf
from .basic_mf import _check_rank, check_factor_shapes, init_factors
from .config import FitResult, ModelConfig
from .errors import DimensionError, SplitError, ValidationError
from .matcore import as_mask, as_matrix, frob_sq, require_nonneg

SOLVERS = ("gradient", "multiplicative_nonneg")


@dataclass(frozen=True)
class MaskedProblem:
    x: np.ndarray
    o: np.ndarray
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "o", as_mask(self.o, x.shape, "o"))
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("alpha and beta must be non-negative")

    @classmethod
    def full(cls, x, alpha=0.0, beta=0.0):
        x = as_matrix(x, "x")
        return cls(x, np.ones_like(x), alpha, beta)


def _objective(x, o, u, v, alpha, beta):
    return frob_sq(o * (x - u @ v.T)) + alpha * frob_sq(u) + beta * frob_sq(v)


def masked_objective(p, f):
    check_factor_shapes(p.x, f.u, f.v)
    return _objective(p.x, p.o, f.u, f.v, p.alpha, p.beta)


def masked_objective_trace(p, f):
    """Trace expansion of :func:`masked_objective` (independent evaluation path)."""
    check_factor_shapes(p.x, f.u, f.v)
    o, x, u, v = p.o, p.x, f.u, f.v
    r = u @ v.T
    ox = o * x
    orr = o * r
    data = np.trace(ox.T @ ox) + np.trace(orr.T @ orr) - 2.0 * np.trace(ox.T @ orr)
    return float(data + p.alpha * np.trace(u.T @ u) + p.beta * np.trace(v.T @ v))


def _grad_u(oox, oo, u, v, alpha):
    r = oo * (u @ v.T)
    return 2.0 * (r @ v - oox @ v + alpha * u)


def _grad_v(oox, oo, u, v, beta):
    r = oo * (u @ v.T)
    return 2.0 * (r.T @ u - oox.T @ u + beta * v)


def masked_grad(p, f):
    """``(2((O∘O∘UVᵀ)V - (O∘O∘X)V + alpha U), 2((O∘O∘UVᵀ)ᵀU - (O∘O∘X)ᵀU + beta V))``."""
    check_factor_shapes(p.x, f.u, f.v)
    oo = p.o * p.o
    oox = oo * p.x
    return _grad_u(oox, oo, f.u, f.v, p.alpha), _grad_v(oox, oo, f.u, f.v, p.beta)


def _kkt(oox, oo, u, v, alpha, beta):
    ku = _grad_u(oox, oo, u, v, alpha) / 2.0 * u
    kv = _grad_v(oox, oo, u, v, beta) / 2.0 * v
    return float(max(np.max(np.abs(ku), initial=0.0), np.max(np.abs(kv), initial=0.0)))


def masked_rmse(x, mask, u, v):
    """RMSE of ``UVᵀ`` against ``X`` over the entries selected by ``mask`` (nan if none)."""
    mask = np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    if n == 0:
        return float("nan")
    d = (x - u @ v.T)[mask]
    return float(np.sqrt(np.sum(d * d) / n))


def fit_completion(p, cfg=None, solver="gradient", validation=None):
    """Fit ``p`` with the chosen solver.

    ``validation`` is an optional mask of held-out entries of ``p.x`` on
    which ``validation_rmse`` is reported; it never enters the fit.
    """
    cfg = cfg or ModelConfig()
    if solver not in SOLVERS:
        raise ValidationError(f"solver must be one of {SOLVERS}")
    x, o, a, b = p.x, p.o, p.alpha, p.beta
    _check_rank(x, cfg.rank)
    oo = o * o
    oox = oo * x

    if solver == "gradient":
        u, v = init_factors(x, cfg.rank, cfg.seed, weights=o)
        state, history, diag, converged = _loop.alternating_descent(
            lambda u, v: _objective(x, o, u, v, a, b),
            lambda u, v: _grad_u(oox, oo, u, v, a),
            lambda u, v: _grad_v(oox, oo, u, v, b),
            u, v, cfg,
        )
        kkt = None
    else:
        require_nonneg(oox, "observed x")
        eps = cfg.eps_floor
        u, v = nmf.init_nonneg(x, cfg.rank, cfg.seed, weights=o)

        def step(s, it):
            u, v = nmf._step(oox, s["U"], s["V"], a, b, eps, w=oo)
            return {"U": u, "V": v}, _objective(x, o, u, v, a, b)

        state, history, diag, converged = _loop.run(
            {"U": u, "V": v}, step,
            lambda s: _objective(x, o, s["U"], s["V"], a, b), cfg,
            {"kkt_residual": lambda s: _kkt(oox, oo, s["U"], s["V"], a, b)},
        )
        kkt = diag["kkt_residual"][-1]

    u, v = state["U"], state["V"]
    extras = {"train_rmse": masked_rmse(x, o, u, v)}
    if validation is not None:
        extras["validation_rmse"] = masked_rmse(x, as_mask(validation, x.shape, "validation"), u, v)
    return FitResult(
        factors={"U": u, "V": v},
        objective_history=history,
        converged=converged,
        kkt_residual=kkt,
        diagnostics=diag,
        extras=extras,
    )


def split_observed(o, train_fraction, seed=0):
    """Partition the observed entries of ``o`` into disjoint train/validation masks.

    The train part holds ``round(train_fraction * n_observed)`` entries,
    clamped so that both parts are non-empty.
    """
    o = np.asarray(o, dtype=np.float64)
    if o.ndim != 2:
        raise DimensionError("mask must be 2-D")
    o = as_mask(o)
    if not 0.0 < train_fraction < 1.0:
        raise SplitError("train_fraction must lie strictly between 0 and 1")
    idx = np.flatnonzero(o)
    n = idx.size
    if n < 2:
        raise SplitError(f"need at least 2 observed entries to split, got {n}")
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(idx)
    train = np.zeros(o.size)
    train[perm[:n_train]] = 1.0
    valid = np.zeros(o.size)
    valid[perm[n_train:]] = 1.0
    return train.reshape(o.shape), valid.reshape(o.shape)
