"""Dual solvers for the two max-margin problems.

Both problems have the form

    min_w  1/2 ||w||^2 + B * sum_i max(0, max_c (delta_ic - w . g_ic))

with one slack per block ``i``.  The pairwise problem has one constraint per
block (B = C); the listwise working set has several per query (B = C / n).
"""

from __future__ import annotations

import numpy as np


def hinge_objective(w, diffs, C):
    """1/2 ||w||^2 + C * sum max(0, 1 - w . diff)."""
    margins = 1.0 - diffs @ w
    return 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())


def _max_step(pairs):
    step = 1.0
    for v, dv in pairs:
        neg = dv < 0
        if neg.any():
            step = min(step, float(np.min(-v[neg] / dv[neg])))
    return step


def _polish(w, diffs, C):
    """Re-solve exactly on the pairs sitting at margin 1; keep it only if better."""
    best, best_obj = w, hinge_objective(w, diffs, C)
    for tau in (1e-4, 1e-6, 1e-8):
        margins = diffs @ best
        on = np.abs(1.0 - margins) < tau
        # violated pairs carry alpha = C; w is their sum projected onto Z_on w = 1
        base = C * diffs[(margins < 1.0) & ~on].sum(axis=0)
        cand = base
        if on.any():
            cand = base + np.linalg.lstsq(diffs[on], 1.0 - diffs[on] @ base, rcond=None)[0]
        obj = hinge_objective(cand, diffs, C)
        if obj < best_obj:
            best, best_obj = cand, obj
    return best


def solve_pairwise(diffs, C, tol=1e-11, max_iter=100):
    """Minimize :func:`hinge_objective` through its box-constrained dual.

    The dual ``min 1/2 a'ZZ'a - sum(a), 0 <= a <= C`` is solved by a
    Mehrotra predictor-corrector interior-point method.  ``ZZ'`` has rank at
    most ``d``, so each Newton step reduces to a ``d x d`` system.  Stops
    when the duality gap of the clipped iterate is below ``tol`` relative to
    the objective, then snaps the margin-1 pairs exactly.

    Returns ``(w, info)`` with the primal objective and duality gap in ``info``.
    """
    Z = np.asarray(diffs, dtype=float)
    m, d = Z.shape
    a = np.full(m, 0.5 * C)
    u = np.full(m, 0.5 * C)  # C - a, kept separately for precision
    s = np.ones(m)
    t = np.ones(m)
    best = (np.inf, np.zeros(d), np.zeros(m), np.inf)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        af = np.clip(a, 0.0, C)
        wf = Z.T @ af
        primal = hinge_objective(wf, Z, C)
        gap = primal - (float(af.sum()) - 0.5 * float(wf @ wf))
        if primal < best[0]:
            best = (primal, wf, af, gap)
        if gap <= tol * max(1.0, primal):
            converged = True
            break

        w = Z.T @ a
        rd = Z @ w - 1.0 - s + t
        rp = a + u - C
        Dinv = 1.0 / (s / a + t / u)
        M = np.eye(d) + Z.T @ (Dinv[:, None] * Z)

        def newton(c1, c2):
            r = -rd + c1 / a - (c2 + t * rp) / u
            rhs = Z.T @ (Dinv * r)
            try:
                dw = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                dw = np.linalg.lstsq(M, rhs, rcond=None)[0]
            da = Dinv * (r - Z @ dw)
            du = -rp - da
            return da, du, (c1 - s * da) / a, (c2 - t * du) / u

        mu = float(a @ s + u @ t) / (2 * m)
        da, du, ds, dt = newton(-a * s, -u * t)
        step = _max_step(((a, da), (u, du), (s, ds), (t, dt)))
        mu_aff = (float((a + step * da) @ (s + step * ds))
                  + float((u + step * du) @ (t + step * dt))) / (2 * m)
        sigma = (mu_aff / mu) ** 3
        da, du, ds, dt = newton(sigma * mu - a * s - da * ds, sigma * mu - u * t - du * dt)
        step = min(1.0, 0.99 * _max_step(((a, da), (u, du), (s, ds), (t, dt))))
        a, u, s, t = a + step * da, u + step * du, s + step * ds, t + step * dt

    _, w, alpha, gap = best
    w = _polish(w, Z, C)
    primal = hinge_objective(w, Z, C)
    info = {"objective": primal, "gap": gap, "iterations": it, "converged": converged}
    return w, info


class BlockDual:
    """Working-set dual of the multi-constraint problem, solved by SMO steps.

    Each block ``i`` owns constraints ``(g_ic, delta_ic)`` and a budget
    ``sum_c alpha_ic <= B``; the unused budget acts as the implicit
    ``xi_i >= 0`` constraint with ``g = 0, delta = 0``.
    """

    def __init__(self, n_blocks, n_features, budget):
        self.budget = float(budget)
        self.g = [np.zeros((0, n_features)) for _ in range(n_blocks)]
        self.delta = [np.zeros(0) for _ in range(n_blocks)]
        self.alpha = [np.zeros(0) for _ in range(n_blocks)]
        self.w = np.zeros(n_features)

    def add(self, block, g, delta):
        self.g[block] = np.vstack([self.g[block], g[None, :]])
        self.delta[block] = np.append(self.delta[block], float(delta))
        self.alpha[block] = np.append(self.alpha[block], 0.0)

    def slack(self, block, w=None):
        w = self.w if w is None else w
        if not len(self.delta[block]):
            return 0.0
        return max(0.0, float((self.delta[block] - self.g[block] @ w).max()))

    def primal(self, w=None):
        w = self.w if w is None else w
        return 0.5 * float(w @ w) + self.budget * sum(self.slack(i, w) for i in range(len(self.g)))

    def dual(self):
        lin = sum(float(a @ dl) for a, dl in zip(self.alpha, self.delta))
        return lin - 0.5 * float(self.w @ self.w)

    def _step_block(self, i, tol, max_steps):
        g, dl, a = self.g[i], self.delta[i], self.alpha[i]
        if not len(dl):
            return 0.0
        worst = 0.0
        for _ in range(max_steps):
            s = dl - g @ self.w
            free = self.budget - a.sum()
            # index -1 stands for the implicit slack constraint (score 0)
            p = int(np.argmax(s))
            sp = s[p]
            if sp < 0.0:
                p, sp = -1, 0.0
            cand = np.where(a > 0.0, s, np.inf)
            q = int(np.argmin(cand)) if len(cand) else -1
            sq = cand[q] if q >= 0 else np.inf
            if free > 0.0 and 0.0 < sq:
                q, sq = -1, 0.0
            gap = sp - sq
            worst = max(worst, gap)
            if gap <= tol or p == q:
                break
            gp = g[p] if p >= 0 else 0.0
            gq = g[q] if q >= 0 else 0.0
            diff = gp - gq
            curv = float(np.dot(diff, diff))
            cap = a[q] if q >= 0 else free
            t = cap if curv <= 0.0 else min(gap / curv, cap)
            if t <= 0.0:
                break
            if p >= 0:
                a[p] += t
            if q >= 0:
                a[q] = max(a[q] - t, 0.0)
            self.w = self.w + t * diff
        return worst

    def solve(self, tol=1e-10, max_passes=5000, steps_per_block=50):
        """Run SMO passes until every block is optimal to ``tol``; returns passes used."""
        passes = 0
        for passes in range(1, max_passes + 1):
            worst = max(self._step_block(i, tol, steps_per_block) for i in range(len(self.g)))
            if worst <= tol:
                break
        return passes
