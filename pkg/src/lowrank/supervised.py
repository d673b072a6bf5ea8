"""Factorization coupled to prediction targets.

Joint factorization + sparse regression::

    ||X - UVᵀ||_F² + lam ||O ∘ (U w - y)||² + lambda_x (||U||_F² + ||V||_F²) + lambda_y ||w||_1

with ``U, V >= 0``.  Rows of ``X`` are instances ordered train-then-test; the
mask ``O`` is 1 on the training prefix, so test responses never enter the
fit while their feature rows still shape ``U`` and ``V``.

Feature-free attitude model::

    ||X - UVᵀ||² + l1 ||U - O||² + l2 ||US - P||² + alpha ||U||² + beta ||V||² + gamma ||S||²

with ``U, V >= 0``, opinion target ``O`` and sentiment target ``P``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _loop, nmf
from .basic_mf import _check_rank
from .config import FitResult, ModelConfig
from .errors import DimensionError, NoDataError, SolverError, ValidationError
from .matcore import as_matrix, frob_sq, pos_neg_split, require_nonneg, safe_ratio_sqrt


def _as_vector(y, name):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and 1 in y.shape:
        y = y.reshape(-1)
    if y.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValidationError(f"{name} contains non-finite entries")
    return y


@dataclass(frozen=True)
class SupervisedProblem:
    x: np.ndarray
    y: np.ndarray
    o: np.ndarray
    lam: float = 1.0
    lambda_x: float = 0.0
    lambda_y: float = 0.0

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        require_nonneg(x, "x")
        y = _as_vector(self.y, "y")
        o = _as_vector(self.o, "o")
        if y.shape[0] != x.shape[0] or o.shape[0] != x.shape[0]:
            raise DimensionError("y and o must have one entry per row of x")
        if not np.all((o == 0) | (o == 1)):
            raise ValidationError("o entries must be 0 or 1")
        n_train = int(o.sum())
        if np.any(o[:n_train] != 1):
            raise ValidationError("o must be 1 on a prefix of rows and 0 afterwards")
        for name in ("lam", "lambda_x", "lambda_y"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "o", o)

    @classmethod
    def from_split(cls, x, y, n_train, **weights):
        o = np.zeros(np.shape(x)[0])
        o[:n_train] = 1.0
        return cls(x, y, o, **weights)

    @property
    def n_train(self):
        return int(self.o.sum())


def sup_objective(p, u, v, w):
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    w = _as_vector(w, "w")
    if u.shape[0] != p.x.shape[0] or v.shape[0] != p.x.shape[1] or w.shape[0] != u.shape[1]:
        raise DimensionError("factor shapes incompatible with problem")
    return _objective(p, u, v, w)


def _objective(p, u, v, w):
    return (
        frob_sq(p.x - u @ v.T)
        + p.lam * frob_sq(p.o * (u @ w - p.y))
        + p.lambda_x * frob_sq(u)
        + p.lambda_x * frob_sq(v)
        + p.lambda_y * float(np.sum(np.abs(w)))
    )


def _update_u(p, u, v, w, eps):
    # O∘(UWᵀ) W = diag(o) U wwᵀ; signed w and y go through the ± split
    lam = p.lam
    yw_pos, yw_neg = pos_neg_split(np.outer(p.o * p.y, w))
    ww_pos, ww_neg = pos_neg_split(np.outer(w, w))
    ou = p.o[:, None] * u
    r = u @ v.T
    num = p.x @ v + lam * yw_pos + lam * (ou @ ww_neg)
    den = r @ v + lam * (ou @ ww_pos) + lam * yw_neg + p.lambda_x * u
    return u * safe_ratio_sqrt(num, den, eps)


def sup_step_uv(p, u, v, w, eps_floor=1e-12):
    """One multiplicative sweep on U then V with ``w`` held fixed."""
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    require_nonneg(u, "u")
    require_nonneg(v, "v")
    w = _as_vector(w, "w")
    u = _update_u(p, u, v, w, eps_floor)
    v = nmf._update_v(p.x, u, v, p.lambda_x, eps_floor)
    return u, v


def sup_kkt_residual(p, u, v, w):
    """Largest complementary-slackness product of the joint model (W fixed)."""
    r = u @ v.T
    gu = r @ v - p.x @ v + p.lam * ((p.o * (u @ w - p.y))[:, None] * w[None, :]) + p.lambda_x * u
    gv = r.T @ u - p.x.T @ u + p.lambda_x * v
    return float(max(np.max(np.abs(gu * u), initial=0.0), np.max(np.abs(gv * v), initial=0.0)))


def lasso_w(u, y, o, lambda_y, lam=1.0, w0=None, tol=1e-13, max_sweeps=100_000):
    """Minimize ``lam ||O ∘ (U w - y)||² + lambda_y ||w||_1`` by cyclic coordinate descent.

    Only rows with ``o == 1`` participate.  ``w0`` warm-starts the sweep;
    each coordinate update is an exact minimization, so the objective never
    increases from ``w0``.
    """
    u = as_matrix(u, "u")
    y = _as_vector(y, "y")
    o = _as_vector(o, "o")
    rows = o > 0
    if not rows.any():
        raise NoDataError("no observed responses")
    k = u.shape[1]
    w = np.zeros(k) if w0 is None else _as_vector(w0, "w0").copy()
    if lam == 0:
        return np.zeros(k)
    a = u[rows]
    b = y[rows]
    col_sq = np.sum(a * a, axis=0)
    resid = b - a @ w
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                new = 0.0
            else:
                rho = a[:, j] @ resid + col_sq[j] * w[j]
                z = 2.0 * lam * rho
                new = np.sign(z) * max(abs(z) - lambda_y, 0.0) / (2.0 * lam * col_sq[j])
            d = new - w[j]
            if d != 0.0:
                resid -= a[:, j] * d
                w[j] = new
                max_delta = max(max_delta, abs(d))
        if max_delta <= tol * max(1.0, float(np.max(np.abs(w)))):
            break
    return w


def _finish(p, u, v, w, history, diag, converged, y_test):
    pred = u @ w
    train = p.o > 0
    extras = {
        "predictions": pred,
        "train_rmse": float(np.sqrt(np.mean((pred[train] - p.y[train]) ** 2))),
    }
    if y_test is not None:
        y_test = _as_vector(y_test, "y_test")
        if y_test.shape[0] != int((~train).sum()):
            raise DimensionError("y_test must have one entry per test row")
        extras["test_rmse"] = float(np.sqrt(np.mean((pred[~train] - y_test) ** 2)))
    return FitResult(
        factors={"U": u, "V": v, "W": w[None, :]},
        objective_history=history,
        converged=converged,
        kkt_residual=diag["kkt_residual"][-1] if "kkt_residual" in diag else None,
        diagnostics=diag,
        extras=extras,
    )


def fit_supervised(p, cfg=None, y_test=None):
    """Alternate a multiplicative (U, V) sweep with a warm-started lasso re-solve of w.

    ``y_test`` (responses of the suffix rows) is used only to report
    ``test_rmse``.
    """
    cfg = cfg or ModelConfig()
    _check_rank(p.x, cfg.rank)
    eps = cfg.eps_floor
    u, v = nmf.init_nonneg(p.x, cfg.rank, cfg.seed)
    w = np.zeros(cfg.rank)

    def step(s, it):
        u, v = s["U"], s["V"]
        u = _update_u(p, u, v, s["W"], eps)
        v = nmf._update_v(p.x, u, v, p.lambda_x, eps)
        w = lasso_w(u, p.y, p.o, p.lambda_y, p.lam, w0=s["W"])
        return {"U": u, "V": v, "W": w}, _objective(p, u, v, w)

    state, history, diag, converged = _loop.run(
        {"U": u, "V": v, "W": w}, step,
        lambda s: _objective(p, s["U"], s["V"], s["W"]), cfg,
        {"kkt_residual": lambda s: sup_kkt_residual(p, s["U"], s["V"], s["W"])},
    )
    return _finish(p, state["U"], state["V"], state["W"], history, diag, converged, y_test)


def fit_two_stage(p, cfg=None, y_test=None):
    """Baseline: non-negative factorization of X alone, then lasso on the frozen U."""
    cfg = cfg or ModelConfig()
    base = nmf.fit_nmf(p.x, cfg.replace(alpha=p.lambda_x, beta=p.lambda_x))
    u, v = base["U"], base["V"]
    w = lasso_w(u, p.y, p.o, p.lambda_y, p.lam)
    history = [_objective(p, u, v, w)]
    return _finish(p, u, v, w, history, {}, base.converged, y_test)


# -- attitude model ----------------------------------------------------------

@dataclass(frozen=True)
class AttitudeProblem:
    """Retweet matrix ``x`` (users x tweets), opinion target ``o_target``
    (users x k) and sentiment target ``p_target`` (users x q).

    The latent rank equals the opinion dimension k; ``s`` optionally gives
    the starting opinion-to-sentiment transform (k x q, zeros by default).
    """

    x: np.ndarray
    o_target: np.ndarray
    p_target: np.ndarray
    lambda1: float = 0.0
    lambda2: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 1e-3
    s: Optional[np.ndarray] = None

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        require_nonneg(x, "x")
        o = as_matrix(self.o_target, "o_target")
        pt = as_matrix(self.p_target, "p_target")
        if o.shape[0] != x.shape[0] or pt.shape[0] != x.shape[0]:
            raise DimensionError("targets need one row per user (row of x)")
        if self.s is not None:
            s = as_matrix(self.s, "s")
            if s.shape != (o.shape[1], pt.shape[1]):
                raise DimensionError(f"s must have shape {(o.shape[1], pt.shape[1])}")
            object.__setattr__(self, "s", s)
        for name in ("lambda1", "lambda2", "alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "o_target", o)
        object.__setattr__(self, "p_target", pt)

    @property
    def rank(self):
        return self.o_target.shape[1]


def attitude_objective(p, u, v, s):
    return (
        frob_sq(p.x - u @ v.T)
        + p.lambda1 * frob_sq(u - p.o_target)
        + p.lambda2 * frob_sq(u @ s - p.p_target)
        + p.alpha * frob_sq(u)
        + p.beta * frob_sq(v)
        + p.gamma * frob_sq(s)
    )


def solve_transform(u, p_target, lambda2, gamma):
    """Ridge solution ``S = (lambda2 UᵀU + gamma I)⁻¹ lambda2 UᵀP``."""
    k = u.shape[1]
    lhs = lambda2 * (u.T @ u) + gamma * np.eye(k)
    rhs = lambda2 * (u.T @ p_target)
    if gamma == 0 and np.linalg.matrix_rank(lhs) < k:
        raise SolverError("singular ridge system: gamma = 0 and lambda2 UᵀU is rank deficient")
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc)) from exc


def _attitude_update_u(p, u, v, s, eps):
    l1, l2 = p.lambda1, p.lambda2
    o_pos, o_neg = pos_neg_split(p.o_target)
    ps_pos, ps_neg = pos_neg_split(p.p_target @ s.T)
    ss_pos, ss_neg = pos_neg_split(s @ s.T)
    r = u @ v.T
    num = p.x @ v + l1 * o_pos + l2 * ps_pos + l2 * (u @ ss_neg)
    den = r @ v + p.alpha * u + l1 * u + l2 * (u @ ss_pos) + l1 * o_neg + l2 * ps_neg
    return u * safe_ratio_sqrt(num, den, eps)


def fit_attitude(p, cfg=None):
    """Multiplicative U, V updates and a closed-form ridge solve for S each cycle.

    The rank is taken from the opinion target; ``cfg.rank`` is ignored.
    """
    cfg = cfg or ModelConfig()
    k = p.rank
    _check_rank(p.x, k)
    eps = cfg.eps_floor
    u, v = nmf.init_nonneg(p.x, k, cfg.seed)
    s = np.zeros((k, p.p_target.shape[1])) if p.s is None else p.s

    def step(st, it):
        u = _attitude_update_u(p, st["U"], st["V"], st["S"], eps)
        v = nmf._update_v(p.x, u, st["V"], p.beta, eps)
        s = solve_transform(u, p.p_target, p.lambda2, p.gamma)
        return {"U": u, "V": v, "S": s}, attitude_objective(p, u, v, s)

    state, history, diag, converged = _loop.run(
        {"U": u, "V": v, "S": s}, step,
        lambda st: attitude_objective(p, st["U"], st["V"], st["S"]), cfg,
    )
    u, v, s = state["U"], state["V"], state["S"]
    return FitResult(
        factors={"U": u, "V": v, "S": s},
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={
            "opinion_residual": float(np.sqrt(frob_sq(u - p.o_target))),
            "sentiment_residual": float(np.sqrt(frob_sq(u @ s - p.p_target))),
        },
    )
