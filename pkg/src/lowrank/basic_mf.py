"""Regularized low-rank factorization ``X ≈ U Vᵀ`` fitted by alternating gradient descent.

The objective is

    ||X - U Vᵀ||_F² + alpha ||U||_F² + beta ||V||_F²

and both factors are updated as whole matrices (not per observed entry).
"""

from dataclasses import dataclass

import numpy as np

from . import _loop
from .config import FitResult, ModelConfig
from .errors import DimensionError
from .matcore import as_matrix, frob_sq


@dataclass(frozen=True)
class FactorPair:
    """Left factor ``u`` (m x k) and right factor ``v`` (n x k)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = as_matrix(self.u, "u")
        v = as_matrix(self.v, "v")
        if u.shape[1] != v.shape[1]:
            raise DimensionError(f"factor ranks differ: {u.shape[1]} vs {v.shape[1]}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def rank(self):
        return self.u.shape[1]

    def reconstruct(self):
        return self.u @ self.v.T


def check_factor_shapes(x, u, v):
    m, n = x.shape
    if u.shape[0] != m or v.shape[0] != n or u.shape[1] != v.shape[1]:
        raise DimensionError(
            f"factors {u.shape}, {v.shape} incompatible with data {x.shape}")


def _check_rank(x, k):
    if k > min(x.shape):
        raise DimensionError(f"rank {k} exceeds min{x.shape}")


def objective_basic(x, f, alpha=0.0, beta=0.0):
    x = as_matrix(x, "x")
    check_factor_shapes(x, f.u, f.v)
    return _objective(x, f.u, f.v, alpha, beta)


def _objective(x, u, v, alpha, beta):
    return frob_sq(x - u @ v.T) + alpha * frob_sq(u) + beta * frob_sq(v)


def objective_basic_trace(x, f, alpha=0.0, beta=0.0):
    """Same objective expanded as ``Tr(XᵀX + V UᵀU Vᵀ - 2 XᵀU Vᵀ) + alpha Tr(UᵀU) + beta Tr(VᵀV)``."""
    x = as_matrix(x, "x")
    u, v = f.u, f.v
    check_factor_shapes(x, u, v)
    data = np.trace(x.T @ x) + np.trace(v @ (u.T @ u) @ v.T) - 2.0 * np.trace(x.T @ u @ v.T)
    return float(data + alpha * np.trace(u.T @ u) + beta * np.trace(v.T @ v))


def _grad_u(x, u, v, alpha):
    r = u @ v.T
    return 2.0 * (r @ v - x @ v + alpha * u)


def _grad_v(x, u, v, beta):
    r = u @ v.T
    return 2.0 * (r.T @ u - x.T @ u + beta * v)


def grad_basic(x, f, alpha=0.0, beta=0.0):
    """Gradients ``(2(UVᵀV - XV + alpha U), 2(VUᵀU - XᵀU + beta V))``."""
    x = as_matrix(x, "x")
    check_factor_shapes(x, f.u, f.v)
    return _grad_u(x, f.u, f.v, alpha), _grad_v(x, f.u, f.v, beta)


def init_factors(x, k, seed, low=0.0, high=1.0, weights=None):
    """Seeded uniform(low, high) factors scaled by ``sqrt(mean|X| / k)``."""
    rng = np.random.default_rng(seed)
    s = _loop.init_scale(x, k, weights)
    m, n = x.shape
    u = rng.uniform(low, high, size=(m, k)) * s
    v = rng.uniform(low, high, size=(n, k)) * s
    return u, v


def fit_basic(x, cfg=None):
    cfg = cfg or ModelConfig()
    x = as_matrix(x, "x")
    k = cfg.rank
    _check_rank(x, k)
    u, v = init_factors(x, k, cfg.seed)
    a, b = cfg.alpha, cfg.beta
    state, history, diag, converged = _loop.alternating_descent(
        lambda u, v: _objective(x, u, v, a, b),
        lambda u, v: _grad_u(x, u, v, a),
        lambda u, v: _grad_v(x, u, v, b),
        u, v, cfg,
    )
    return FitResult(
        factors={"U": state["U"], "V": state["V"]},
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={"relative_error": relative_error(x, state["U"], state["V"])},
    )


def relative_error(x, u, v):
    """``||X - UVᵀ||_F / ||X||_F`` (0 for an all-zero X reconstructed exactly)."""
    num = np.sqrt(frob_sq(x - u @ v.T))
    den = np.sqrt(frob_sq(x))
    return float(num / den) if den > 0 else float(num)
