"""Iteration drivers shared by the model modules."""

import numpy as np

from .errors import DivergenceError
from .matcore import frob_sq

_TINY = np.finfo(np.float64).tiny
_ARMIJO = 1e-4
_MAX_SHRINKS = 60


def init_scale(x, k, weights=None):
    """``sqrt(mean|X| / k)`` over the weighted (observed) entries.

    Falls back to ``sqrt(1/k)`` when no entry carries mass, so that
    multiplicative solvers still start from a strictly positive point.
    """
    w = np.ones_like(x) if weights is None else weights
    count = np.sum(w)
    mean = np.sum(np.abs(x) * w) / count if count > 0 else 0.0
    if not mean > 0:
        mean = 1.0
    return float(np.sqrt(mean / k))


def relative_change(prev, cur):
    return abs(prev - cur) / max(abs(prev), _TINY)


def run(state, step, objective, cfg, diagnostics=None):
    """Iterate ``state, f = step(state, it)`` until the relative objective change
    drops below ``cfg.rel_tol`` or ``cfg.max_iter`` steps were taken.

    Returns ``(state, history, diag, converged)`` where ``diag`` maps each
    diagnostic name to its per-iteration series.
    """
    diagnostics = diagnostics or {}
    f = objective(state)
    if not np.isfinite(f):
        raise DivergenceError(0)
    history = [f]
    diag = {name: [fn(state)] for name, fn in diagnostics.items()}
    converged = False
    for it in range(1, cfg.max_iter + 1):
        prev = f
        state, f = step(state, it)
        if not np.isfinite(f):
            raise DivergenceError(it)
        history.append(f)
        for name, fn in diagnostics.items():
            diag[name].append(fn(state))
        if f == 0.0 or relative_change(prev, f) < cfg.rel_tol:
            converged = True
            break
    return state, history, diag, converged


def backtrack(evaluate, x0, grad, f0, step, shrink, it=0):
    """One Armijo backtracking step from ``x0`` along ``-grad``.

    Returns ``(x, f, step)``; the objective never increases.  If no trial step
    is accepted the point is left unchanged.
    """
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(it, f"gradient became non-finite at iteration {it}")
    gg = frob_sq(grad)
    if gg == 0.0:
        return x0, f0, step
    t = step
    for _ in range(_MAX_SHRINKS):
        cand = x0 - t * grad
        fc = evaluate(cand)
        if np.isfinite(fc) and fc <= f0 - _ARMIJO * t * gg:
            return cand, fc, t
        t *= shrink
    return x0, f0, step


def alternating_descent(objective, grad_u, grad_v, u, v, cfg, diagnostics=None):
    """Alternating full-matrix gradient descent on ``objective(u, v)``.

    Each factor is moved as a whole (simultaneous update) with its own
    backtracking step; a factor's accepted step is grown by ``1/step_shrink``
    before the next trial.
    """
    steps = {"U": cfg.step_init, "V": cfg.step_init}
    shrink = cfg.step_shrink

    def step(state, it):
        u, v = state["U"], state["V"]
        f = objective(u, v)
        u, f, t = backtrack(lambda c: objective(c, v), u, grad_u(u, v), f, steps["U"], shrink, it)
        steps["U"] = t / shrink
        v, f, t = backtrack(lambda c: objective(u, c), v, grad_v(u, v), f, steps["V"], shrink, it)
        steps["V"] = t / shrink
        return {"U": u, "V": v}, f

    diag = {name: (lambda s, fn=fn: fn(s["U"], s["V"])) for name, fn in (diagnostics or {}).items()}
    return run({"U": u, "V": v}, step, lambda s: objective(s["U"], s["V"]), cfg, diag)
