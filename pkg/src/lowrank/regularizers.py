"""Completion models that use data beyond the target matrix.

* graph self-regularization: ``lambda_l Tr(UᵀLU)`` pulls the factor rows of
  linked users together;
* two-sided co-factorization: side matrices ``A ≈ UGᵀ`` and ``B ≈ VG*ᵀ``
  with the coupling ``delta ||G - G*||_1``;
* enforcement: ``||G_u (U - U₀)||_F²`` pulls indicated rows of U onto a
  known target.
"""

from dataclasses import dataclass

import numpy as np

from . import _loop, completion, onmf3
from .basic_mf import _check_rank, check_factor_shapes, init_factors
from .config import FitResult, ModelConfig
from .errors import DimensionError, ValidationError
from .matcore import GraphData, as_mask, as_matrix, frob_sq, pos_neg_split, require_nonneg, safe_ratio_sqrt


# -- graph self-regularization ----------------------------------------------

def _check_graph(u, g):
    if not isinstance(g, GraphData):
        raise ValidationError("g must be GraphData (see laplacian_from_adjacency)")
    if g.laplacian.shape != (u.shape[0], u.shape[0]):
        raise DimensionError(f"graph has {g.n_nodes} nodes, factor has {u.shape[0]} rows")


def laplacian_reg_value(u, g):
    """``Tr(Uᵀ L U)``; equals half the link-weighted sum of squared row distances."""
    u = as_matrix(u, "u")
    _check_graph(u, g)
    return float(np.trace(u.T @ g.laplacian @ u))


def laplacian_objective(p, g, lambda_l, f):
    check_factor_shapes(p.x, f.u, f.v)
    _check_graph(f.u, g)
    return completion._objective(p.x, p.o, f.u, f.v, p.alpha, p.beta) + lambda_l * np.trace(f.u.T @ g.laplacian @ f.u)


def laplacian_grad(p, g, lambda_l, f):
    """Masked gradients with ``2 lambda_l L U`` added to the U part."""
    gu, gv = completion.masked_grad(p, f)
    _check_graph(f.u, g)
    return gu + 2.0 * lambda_l * (g.laplacian @ f.u), gv


def fit_laplacian_mf(p, g, lambda_l, cfg=None):
    cfg = cfg or ModelConfig()
    if lambda_l < 0:
        raise ValidationError("lambda_l must be non-negative")
    x, o, a, b = p.x, p.o, p.alpha, p.beta
    _check_rank(x, cfg.rank)
    if g.laplacian.shape != (x.shape[0], x.shape[0]):
        raise DimensionError(f"graph has {g.n_nodes} nodes, data has {x.shape[0]} rows")
    lap = g.laplacian
    oo = o * o
    oox = oo * x

    def objective(u, v):
        return completion._objective(x, o, u, v, a, b) + lambda_l * np.trace(u.T @ lap @ u)

    u, v = init_factors(x, cfg.rank, cfg.seed, weights=o)
    state, history, diag, converged = _loop.alternating_descent(
        objective,
        lambda u, v: completion._grad_u(oox, oo, u, v, a) + 2.0 * lambda_l * (lap @ u),
        lambda u, v: completion._grad_v(oox, oo, u, v, b),
        u, v, cfg,
    )
    u, v = state["U"], state["V"]
    return FitResult(
        factors={"U": u, "V": v},
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={
            "train_rmse": completion.masked_rmse(x, o, u, v),
            "laplacian_reg": float(np.trace(u.T @ lap @ u)),
        },
    )


# -- two-sided co-factorization ---------------------------------------------

@dataclass(frozen=True)
class TwoSidedProblem:
    """Interactions ``x`` (m x n) with user descriptions ``a`` (m x w) and
    item descriptions ``b`` (n x w) over a shared vocabulary of size w."""

    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    lambda_a: float = 0.0
    lambda_b: float = 0.0
    delta: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        require_nonneg(x, "x")
        m, n = x.shape
        if a.shape[0] != m or b.shape[0] != n:
            raise DimensionError(f"side matrices {a.shape}, {b.shape} do not match data {x.shape}")
        if a.shape[1] != b.shape[1]:
            raise DimensionError("a and b must share the description dimension")
        for name in ("lambda_a", "lambda_b", "delta", "alpha"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def twosided_objective(p, u, h, v, g, gs):
    """Full co-factorization criterion, with ``gs`` standing for G*."""
    return (
        frob_sq(p.x - u @ h @ v.T)
        + p.lambda_a * frob_sq(p.a - u @ g.T)
        + p.lambda_b * frob_sq(p.b - v @ gs.T)
        + p.delta * float(np.sum(np.abs(g - gs)))
        + p.alpha * (frob_sq(u) + frob_sq(v) + frob_sq(h) + frob_sq(g))
    )


def soft_threshold(z, tau):
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def _factor_update(f, p, q, side, side_w, lam, alpha, eps):
    # f ≥ 0 minimizes ||X-part|| + lam ||side - f side_wᵀ||² + alpha ||f||²; signed
    # side terms go through the positive/negative split
    sg_pos, sg_neg = pos_neg_split(side @ side_w)
    ww_pos, ww_neg = pos_neg_split(side_w.T @ side_w)
    num = p + lam * sg_pos + lam * (f @ ww_neg)
    den = f @ q + lam * (f @ ww_pos) + lam * sg_neg + alpha * f
    return f * safe_ratio_sqrt(num, den, eps)


def _prox_pair(g, gs, a_side, b_side, u, v, la, lb, alpha, delta):
    """Joint proximal-gradient step on ``(G, G*)``.

    The smooth part ``la ||A - UGᵀ||² + alpha ||G||² + lb ||B - VG*ᵀ||²`` is
    separable in the two blocks; the prox of ``delta ||G - G*||_1`` on the
    pair soft-thresholds the difference by ``2 t delta`` and keeps the mean.
    The step ``t = 1/L`` (L the larger block Lipschitz constant) guarantees
    the composite objective does not increase.
    """
    uu = u.T @ u
    vv = v.T @ v
    lip = 2.0 * max(la * np.linalg.norm(uu, 2) + alpha, lb * np.linalg.norm(vv, 2))
    if lip == 0.0:
        if delta > 0:
            mid = (g + gs) / 2.0
            return mid, mid.copy()
        return g, gs
    t = 1.0 / lip
    z = g - t * (2.0 * la * (g @ uu - a_side.T @ u) + 2.0 * alpha * g)
    zs = gs - t * (2.0 * lb * (gs @ vv - b_side.T @ v))
    mid = (z + zs) / 2.0
    half = soft_threshold(z - zs, 2.0 * t * delta) / 2.0
    return mid + half, mid - half


def fit_twosided(p, cfg=None):
    """Alternate multiplicative H, U, V updates with a joint proximal step on (G, G*).

    U, H and V are kept non-negative; G and G* are unconstrained.  With
    ``lambda_a = lambda_b = delta = alpha = 0`` the U, H, V trajectory equals
    ``fit_onmf3(x, cfg, mode="three_factor_plain")``.
    """
    cfg = cfg or ModelConfig()
    x, a_side, b_side = p.x, p.a, p.b
    k = cfg.rank
    if k > min(x.shape):
        raise DimensionError(f"rank exceeds min{x.shape}")
    la, lb, delta, alpha, eps = p.lambda_a, p.lambda_b, p.delta, p.alpha, cfg.eps_floor
    u, h, v = onmf3.init_trifactor(x, k, k, cfg.seed)
    w = a_side.shape[1]
    g = np.zeros((w, k))
    gs = np.zeros((w, k))

    def step(s, it):
        u, h, v, g, gs = s["U"], s["H"], s["V"], s["G"], s["G*"]
        num, den = onmf3._h_terms(x, u, h, v)
        h = h * safe_ratio_sqrt(num, den + alpha * h, eps)
        pu, qu = onmf3._u_terms(x, u, h, v)
        u = _factor_update(u, pu, qu, a_side, g, la, alpha, eps)
        pv, qv = onmf3._v_terms(x, u, h, v)
        v = _factor_update(v, pv, qv, b_side, gs, lb, alpha, eps)
        g, gs = _prox_pair(g, gs, a_side, b_side, u, v, la, lb, alpha, delta)
        s = {"U": u, "H": h, "V": v, "G": g, "G*": gs}
        return s, twosided_objective(p, u, h, v, g, gs)

    state, history, diag, converged = _loop.run(
        {"U": u, "H": h, "V": v, "G": g, "G*": gs}, step,
        lambda s: twosided_objective(p, s["U"], s["H"], s["V"], s["G"], s["G*"]), cfg,
    )
    return FitResult(
        factors=dict(state),
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={
            "coupling_l1": float(np.sum(np.abs(state["G"] - state["G*"]))),
            "x_residual": frob_sq(x - state["U"] @ state["H"] @ state["V"].T),
        },
    )


# -- enforcement -------------------------------------------------------------

@dataclass(frozen=True)
class EnforcementTarget:
    """Target rows ``u0`` and a 0/1 row indicator (vector or diagonal matrix)."""

    u0: np.ndarray
    indicator: np.ndarray

    def __post_init__(self):
        u0 = as_matrix(self.u0, "u0")
        ind = np.asarray(self.indicator, dtype=np.float64)
        if ind.ndim == 2:
            if ind.shape[0] != ind.shape[1] or np.any(ind - np.diag(np.diag(ind))):
                raise ValidationError("indicator matrix must be diagonal")
            ind = np.diag(ind).copy()
        if ind.shape != (u0.shape[0],):
            raise DimensionError(f"indicator has {ind.shape}, u0 has {u0.shape[0]} rows")
        ind = as_mask(ind, name="indicator")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "indicator", ind)


def enforcement_reg_value(u, t):
    """``||diag(indicator) (U - U₀)||_F²``; unindicated rows contribute nothing."""
    u = as_matrix(u, "u")
    if u.shape != t.u0.shape:
        raise DimensionError(f"u {u.shape} vs u0 {t.u0.shape}")
    return frob_sq(t.indicator[:, None] * (u - t.u0))


def fit_enforced_mf(p, t, weight, cfg=None):
    """Masked completion plus ``weight * enforcement_reg_value``, by gradient descent."""
    cfg = cfg or ModelConfig()
    if weight < 0:
        raise ValidationError("weight must be non-negative")
    x, o, a, b = p.x, p.o, p.alpha, p.beta
    _check_rank(x, cfg.rank)
    if t.u0.shape != (x.shape[0], cfg.rank):
        raise DimensionError(f"u0 must have shape {(x.shape[0], cfg.rank)}")
    oo = o * o
    oox = oo * x
    ind = t.indicator[:, None]
    u0 = t.u0

    def objective(u, v):
        return completion._objective(x, o, u, v, a, b) + weight * frob_sq(ind * (u - u0))

    u, v = init_factors(x, cfg.rank, cfg.seed, weights=o)
    state, history, diag, converged = _loop.alternating_descent(
        objective,
        lambda u, v: completion._grad_u(oox, oo, u, v, a) + 2.0 * weight * (ind * ind * (u - u0)),
        lambda u, v: completion._grad_v(oox, oo, u, v, b),
        u, v, cfg,
    )
    u, v = state["U"], state["V"]
    return FitResult(
        factors={"U": u, "V": v},
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={"enforcement_residual": frob_sq(ind * (u - u0))},
    )
