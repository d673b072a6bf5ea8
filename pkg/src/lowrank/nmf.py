"""Non-negative factorization with multiplicative updates.

Minimizes ``||X - UVᵀ||_F² + alpha ||U||_F² + beta ||V||_F²`` subject to
``U, V >= 0``.  Setting the complementary-slackness products

    (UVᵀV - XV + alpha U) ∘ U = 0,   (VUᵀU - XᵀU + beta V) ∘ V = 0

to zero gives the square-root multiplicative rules implemented by
:func:`nmf_step`.  Each rule is the exact minimizer of the auxiliary function
:func:`aux_value`, which is what makes the objective non-increasing.
"""

import numpy as np

from . import _loop
from .basic_mf import FactorPair, _check_rank, _objective, check_factor_shapes, relative_error
from .config import FitResult, ModelConfig
from .errors import DomainError
from .matcore import as_matrix, require_nonneg, safe_ratio_sqrt


def _update_u(xw, u, v, alpha, eps, w=None):
    r = u @ v.T
    if w is not None:
        r = w * r
    return u * safe_ratio_sqrt(xw @ v, r @ v + alpha * u, eps)


def _update_v(xw, u, v, beta, eps, w=None):
    r = u @ v.T
    if w is not None:
        r = w * r
    return v * safe_ratio_sqrt(xw.T @ u, r.T @ u + beta * v, eps)


def _step(xw, u, v, alpha, beta, eps, w=None):
    u = _update_u(xw, u, v, alpha, eps, w)
    v = _update_v(xw, u, v, beta, eps, w)
    return u, v


def _validate(x, f):
    x = as_matrix(x, "x")
    require_nonneg(x, "x")
    check_factor_shapes(x, f.u, f.v)
    require_nonneg(f.u, "u")
    require_nonneg(f.v, "v")
    return x


def nmf_step(x, f, alpha=0.0, beta=0.0, eps_floor=1e-12):
    """One multiplicative sweep: U first, then V using the new U."""
    x = _validate(x, f)
    u, v = _step(x, f.u, f.v, alpha, beta, eps_floor)
    return FactorPair(u, v)


def _kkt(x, u, v, alpha, beta):
    r = u @ v.T
    ku = (r @ v - x @ v + alpha * u) * u
    kv = (r.T @ u - x.T @ u + beta * v) * v
    return float(max(np.max(np.abs(ku), initial=0.0), np.max(np.abs(kv), initial=0.0)))


def kkt_residual_nmf(x, f, alpha=0.0, beta=0.0):
    """Largest absolute complementary-slackness product over both factors."""
    x = _validate(x, f)
    return _kkt(x, f.u, f.v, alpha, beta)


def aux_loss(u, x, v, alpha=0.0):
    """U-dependent part of the objective: ``Tr(UᵀU VᵀV - 2 UᵀXV) + alpha Tr(UᵀU)``."""
    u = as_matrix(u, "u")
    return float(np.trace(u.T @ u @ (v.T @ v) - 2.0 * u.T @ x @ v) + alpha * np.trace(u.T @ u))


def aux_value(u, u_t, x, v, alpha=0.0):
    """Auxiliary function ``G(U, Uᵗ)`` upper-bounding :func:`aux_loss`.

    Requires strictly positive ``u`` and ``u_t``; ``G(U, U)`` equals the loss
    and the minimizer over ``U`` is the multiplicative U-update of ``Uᵗ``.
    """
    u = as_matrix(u, "u")
    u_t = as_matrix(u_t, "u_t")
    if np.any(u <= 0) or np.any(u_t <= 0):
        raise DomainError("aux_value needs strictly positive u and u_t")
    x = as_matrix(x, "x")
    v = as_matrix(v, "v")
    xv = x @ v
    linear = -2.0 * np.sum(xv * u_t * (1.0 + np.log(u / u_t)))
    quad = np.sum((u_t @ (v.T @ v)) * u * u / u_t)
    reg = alpha * np.sum(u_t * u * u / u_t)
    return float(linear + quad + reg)


def init_nonneg(x, k, seed, weights=None):
    """Strictly positive uniform(0.1, 1.1) start, scaled like the basic model."""
    rng = np.random.default_rng(seed)
    s = _loop.init_scale(x, k, weights)
    m, n = x.shape
    u = rng.uniform(0.1, 1.1, size=(m, k)) * s
    v = rng.uniform(0.1, 1.1, size=(n, k)) * s
    return u, v


def fit_nmf(x, cfg=None):
    cfg = cfg or ModelConfig()
    x = as_matrix(x, "x")
    require_nonneg(x, "x")
    _check_rank(x, cfg.rank)
    a, b, eps = cfg.alpha, cfg.beta, cfg.eps_floor
    u, v = init_nonneg(x, cfg.rank, cfg.seed)

    def step(state, it):
        u, v = _step(x, state["U"], state["V"], a, b, eps)
        return {"U": u, "V": v}, _objective(x, u, v, a, b)

    state, history, diag, converged = _loop.run(
        {"U": u, "V": v}, step,
        lambda s: _objective(x, s["U"], s["V"], a, b), cfg,
        {"kkt_residual": lambda s: _kkt(x, s["U"], s["V"], a, b)},
    )
    return FitResult(
        factors={"U": state["U"], "V": state["V"]},
        objective_history=history,
        converged=converged,
        kkt_residual=diag["kkt_residual"][-1],
        diagnostics=diag,
        extras={"relative_error": relative_error(x, state["U"], state["V"])},
    )

