"""Limited-memory BFGS with monotone backtracking (Armijo) line search."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class LBFGSResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    converged: bool
    line_search_failed: bool = False
    history: list = field(default_factory=list)


def minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    *,
    memory: int = 8,
    max_iterations: int = 500,
    grad_tolerance: float = 1e-10,
    armijo: float = 1e-4,
    shrink: float = 0.5,
    max_halvings: int = 50,
    initial_step: float = 1.0,
    callback: Callable[[np.ndarray, float], None] | None = None,
) -> LBFGSResult:
    """Minimize ``fun`` (returning value and gradient) starting from ``x0``.

    Every accepted step satisfies the Armijo condition, so the recorded energy
    history is non-increasing.  ``initial_step`` bounds the max-norm of the
    very first trial step.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    history = [f]
    pairs: deque = deque(maxlen=memory)
    for it in range(max_iterations):
        if not np.isfinite(f) or np.abs(g).max(initial=0.0) <= grad_tolerance:
            return LBFGSResult(x, f, g, it, True, history=history)
        d = -_two_loop(g, pairs)
        slope = float(g @ d)
        if slope >= 0:
            pairs.clear()
            d = -g
            slope = float(g @ d)
        if not pairs:
            d *= initial_step / max(np.abs(d).max(), 1e-300)
            slope = float(g @ d)
        alpha = 1.0
        for _ in range(max_halvings):
            x_new = x + alpha * d
            f_new, g_new = fun(x_new)
            if f_new <= f + armijo * alpha * slope:
                break
            alpha *= shrink
        else:
            return LBFGSResult(x, f, g, it, False, line_search_failed=True, history=history)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.sqrt((s @ s) * (y @ y))):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if callback is not None:
            callback(x, f)
    converged = np.abs(g).max(initial=0.0) <= grad_tolerance
    return LBFGSResult(x, f, g, max_iterations, bool(converged), history=history)


def _two_loop(g: np.ndarray, pairs) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q
