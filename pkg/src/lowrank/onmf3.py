"""Orthogonal non-negative tri-factorization ``X ≈ U H Vᵀ``.

``U, H, V >= 0`` with the soft targets ``UᵀU = I`` and ``VᵀV = I``.  The
orthogonality multipliers are eliminated by evaluating

    Γ_U = UᵀXVHᵀ - HVᵀVHᵀ,     Γ_V = VᵀXᵀUH - HᵀUᵀUH

at the current factors and splitting each into non-negative parts
``Γ = Γ⁺ - Γ⁻`` so the multiplicative ratios stay non-negative.

Modes of :func:`fit_onmf3`:

``three_factor_bi``
    cycle H, U, V with both orthogonality terms (row and column clustering).
``two_factor_onesided``
    H fixed to the identity; U is a plain non-negative factor and V carries
    the orthogonality term.  This is the K-means-like model ``X ≈ UVᵀ``.
``three_factor_plain``
    cycle H, U, V with the orthogonality terms dropped (plain non-negative
    tri-factorization); the base model the regularized co-factorization
    reduces to.
"""

from dataclasses import dataclass

import numpy as np

from . import _loop
from .config import FitResult, ModelConfig
from .errors import DegenerateClusterError, DimensionError, ValidationError
from .matcore import as_matrix, frob_sq, pos_neg_split, require_nonneg, safe_ratio_sqrt

MODES = ("three_factor_bi", "two_factor_onesided", "three_factor_plain")


@dataclass(frozen=True)
class TriFactor:
    u: np.ndarray
    h: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u, h, v = (as_matrix(a, n) for a, n in ((self.u, "u"), (self.h, "h"), (self.v, "v")))
        if h.shape != (u.shape[1], v.shape[1]):
            raise DimensionError(f"h has shape {h.shape}, expected {(u.shape[1], v.shape[1])}")
        for a, n in ((u, "u"), (h, "h"), (v, "v")):
            require_nonneg(a, n)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)

    def reconstruct(self):
        return self.u @ self.h @ self.v.T


@dataclass(frozen=True)
class OrthoDiagnostics:
    u_ortho_gap: float
    v_ortho_gap: float


def ortho_gap(a):
    """``||AᵀA - I||_F``."""
    return float(np.sqrt(frob_sq(a.T @ a - np.eye(a.shape[1]))))


def ortho_diagnostics(t):
    return OrthoDiagnostics(ortho_gap(t.u), ortho_gap(t.v))


def tri_objective(x, u, h, v):
    return frob_sq(x - u @ h @ v.T)


def _validate(x, t):
    x = as_matrix(x, "x")
    require_nonneg(x, "x")
    if x.shape != (t.u.shape[0], t.v.shape[0]):
        raise DimensionError(f"factors incompatible with data of shape {x.shape}")
    return x


# The terms below are shared with the co-factorization model in
# ``regularizers`` so that its zero-weight reduction is bit-identical.

def _h_terms(x, u, h, v):
    return u.T @ x @ v, (u.T @ u) @ h @ (v.T @ v)


def _u_terms(x, u, h, v):
    """``(XVHᵀ, HVᵀVHᵀ)``."""
    return x @ (v @ h.T), h @ (v.T @ v) @ h.T


def _v_terms(x, u, h, v):
    """``(XᵀUH, HᵀUᵀUH)``."""
    return x.T @ (u @ h), h.T @ (u.T @ u) @ h


def _update_h(x, u, h, v, eps):
    num, den = _h_terms(x, u, h, v)
    return h * safe_ratio_sqrt(num, den, eps)


def _ortho_update(a, p, q, eps, orthogonal):
    # a ← a * sqrt((p + aΓ⁻) / (aq + aΓ⁺)) with Γ = aᵀp - q
    num, den = p, a @ q
    if orthogonal:
        g_pos, g_neg = pos_neg_split(a.T @ p - q)
        num = num + a @ g_neg
        den = den + a @ g_pos
    return a * safe_ratio_sqrt(num, den, eps)


def _update_u(x, u, h, v, eps, orthogonal=True):
    p, q = _u_terms(x, u, h, v)
    return _ortho_update(u, p, q, eps, orthogonal)


def _update_v(x, u, h, v, eps, orthogonal=True):
    p, q = _v_terms(x, u, h, v)
    return _ortho_update(v, p, q, eps, orthogonal)


def gamma_u(x, t):
    """Orthogonality multiplier estimate for U."""
    x = _validate(x, t)
    p, q = _u_terms(x, t.u, t.h, t.v)
    return t.u.T @ p - q


def gamma_v(x, t):
    """Orthogonality multiplier estimate for V (minus sign on the second term)."""
    x = _validate(x, t)
    p, q = _v_terms(x, t.u, t.h, t.v)
    return t.v.T @ p - q


def onmf_step_h(x, t, eps_floor=1e-12):
    x = _validate(x, t)
    return _update_h(x, t.u, t.h, t.v, eps_floor)


def onmf_step_u(x, t, eps_floor=1e-12, orthogonal=True):
    x = _validate(x, t)
    return _update_u(x, t.u, t.h, t.v, eps_floor, orthogonal)


def onmf_step_v(x, t, eps_floor=1e-12, orthogonal=True):
    x = _validate(x, t)
    return _update_v(x, t.u, t.h, t.v, eps_floor, orthogonal)


def normalize_indicator(v_raw):
    """Scale each column to unit 2-norm, i.e. ``V' (V'ᵀV')^(-1/2)`` for an indicator ``V'``."""
    v_raw = as_matrix(v_raw, "v_raw")
    require_nonneg(v_raw, "v_raw")
    norms = np.sqrt(np.sum(v_raw * v_raw, axis=0))
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0).tolist()
        raise DegenerateClusterError(f"empty cluster column(s) {bad}")
    return v_raw / norms


def assign_clusters(factor):
    """Row-wise argmax; ties go to the lowest column index."""
    return np.argmax(np.asarray(factor), axis=1)


def _unit_columns(a):
    return a / np.sqrt(np.sum(a * a, axis=0))


def init_trifactor(x, k1, k2, seed):
    """Positive start: unit-norm columns for U and V, H scaled to best fit X.

    H is drawn uniform(0.1, 1.1) then multiplied by the scalar minimizing
    ``||X - c U H Vᵀ||``; an all-zero X keeps the raw draw.
    """
    rng = np.random.default_rng(seed)
    m, n = x.shape
    u = _unit_columns(rng.uniform(0.1, 1.1, size=(m, k1)))
    v = _unit_columns(rng.uniform(0.1, 1.1, size=(n, k2)))
    h = rng.uniform(0.1, 1.1, size=(k1, k2))
    r = u @ h @ v.T
    c = float(np.sum(x * r) / np.sum(r * r))
    if c > 0:
        h = h * c
    return u, h, v


def fit_onmf3(x, cfg=None, mode="three_factor_bi", k2=None):
    cfg = cfg or ModelConfig()
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    x = as_matrix(x, "x")
    require_nonneg(x, "x")
    k1 = cfg.rank
    k2 = k1 if (k2 is None or mode == "two_factor_onesided") else k2
    if max(k1, k2) > min(x.shape):
        raise DimensionError(f"rank exceeds min{x.shape}")
    eps = cfg.eps_floor
    u, h, v = init_trifactor(x, k1, k2, cfg.seed)

    if mode == "two_factor_onesided":
        h = np.eye(k1)
        r = u @ v.T
        c = float(np.sum(x * r) / np.sum(r * r))
        if c > 0:
            u = u * c

        def step(s, it):
            u = _update_u(x, s["U"], h, s["V"], eps, orthogonal=False)
            v = _update_v(x, u, h, s["V"], eps, orthogonal=True)
            return {"U": u, "H": h, "V": v}, tri_objective(x, u, h, v)
    else:
        ortho = mode == "three_factor_bi"

        def step(s, it):
            u, h, v = s["U"], s["H"], s["V"]
            h = _update_h(x, u, h, v, eps)
            u = _update_u(x, u, h, v, eps, ortho)
            v = _update_v(x, u, h, v, eps, ortho)
            return {"U": u, "H": h, "V": v}, tri_objective(x, u, h, v)

    state, history, diag, converged = _loop.run(
        {"U": u, "H": h, "V": v}, step,
        lambda s: tri_objective(x, s["U"], s["H"], s["V"]), cfg,
        {"u_ortho_gap": lambda s: ortho_gap(s["U"]), "v_ortho_gap": lambda s: ortho_gap(s["V"])},
    )
    factors = {"U": state["U"], "V": state["V"]}
    if mode != "two_factor_onesided":
        factors["H"] = state["H"]
    return FitResult(
        factors=factors,
        objective_history=history,
        converged=converged,
        diagnostics=diag,
        extras={
            "mode": mode,
            "u_ortho_gap": diag["u_ortho_gap"][-1],
            "v_ortho_gap": diag["v_ortho_gap"][-1],
            "row_labels": assign_clusters(state["U"]),
            "col_labels": assign_clusters(state["V"]),
        },
    )
