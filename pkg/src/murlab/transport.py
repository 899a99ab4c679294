"""Wasserstein-2 distances between discrete distributions and between observables."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .observables import DiscreteObservable
from .qcore import TOL_HERM, TOL_PSD, PreconditionError, QuantumState, bloch_coefficients, sqrt_above_roundoff

GRID_POINTS = 2048
REFINE_STARTS = 4
REFINE_XTOL = 1e-7


@dataclass(frozen=True)
class DiscreteDistribution:
    values: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.weights) or len(self.values) == 0:
            raise ValueError("one weight per value and at least one point required")
        w = np.asarray(self.weights, dtype=float)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(self.values))):
            raise ValueError("distribution values and weights must be finite")
        if np.any(w < -TOL_PSD):
            raise ValueError("distribution has negative weights")
        if abs(w.sum() - 1) > TOL_HERM:
            raise ValueError(f"distribution is not normalized (sum {w.sum():.15g})")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "weights", tuple(float(max(v, 0.0)) for v in w))

    def items(self):
        return zip(self.values, self.weights)


@dataclass(frozen=True)
class TransportPlan:
    """A coupling: ``matrix[k, l]`` is the mass moved from ``source[k]`` to ``target[l]``."""

    source: tuple[float, ...]
    target: tuple[float, ...]
    matrix: np.ndarray
    cost: float

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.matrix.sum(axis=1), self.matrix.sum(axis=0)


def distribution_of(obs: DiscreteObservable, rho: QuantumState) -> DiscreteDistribution:
    if obs.dim != rho.dim:
        raise ValueError("state and observable dimensions differ")
    return DiscreteDistribution(obs.values, tuple(obs.probabilities(rho)))


def squared_cost(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x[:, None] - y[None, :]) ** 2


# -- transportation simplex --------------------------------------------------


def _vogel(supply: np.ndarray, demand: np.ndarray, cost: np.ndarray):
    """Vogel's approximation; returns a basic feasible plan and its m+n-1 basic cells."""
    s, d = supply.copy(), demand.copy()
    m, n = cost.shape
    plan = np.zeros((m, n))
    basis: list[tuple[int, int]] = []
    rows, cols = set(range(m)), set(range(n))

    while rows and cols:
        if len(rows) == 1 or len(cols) == 1:
            for i in sorted(rows):
                for j in sorted(cols):
                    x = d[j] if len(rows) == 1 else s[i]
                    plan[i, j] = max(x, 0.0)
                    basis.append((i, j))
            break

        def penalty(line):
            line = np.sort(line)
            return line[1] - line[0]

        cl = sorted(cols)
        rl = sorted(rows)
        best = None
        for i in rl:
            p = penalty(cost[i, cl])
            if best is None or p > best[0]:
                best = (p, "row", i)
        for j in cl:
            p = penalty(cost[rl, j])
            if p > best[0]:
                best = (p, "col", j)
        if best[1] == "row":
            i = best[2]
            j = cl[int(np.argmin(cost[i, cl]))]
        else:
            j = best[2]
            i = rl[int(np.argmin(cost[rl, j]))]

        x = min(s[i], d[j])
        plan[i, j] = x
        basis.append((i, j))
        # drop exactly one line per step so the basis stays a spanning tree
        if s[i] <= d[j]:
            d[j] -= x
            s[i] = 0.0
            rows.discard(i)
        else:
            s[i] -= x
            d[j] = 0.0
            cols.discard(j)
    return plan, basis


def _potentials(cost: np.ndarray, basis: list[tuple[int, int]]):
    m, n = cost.shape
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for i, j in basis:
        by_row.setdefault(i, []).append(j)
        by_col.setdefault(j, []).append(i)
    queue = deque([("r", 0)])
    while queue:
        kind, idx = queue.popleft()
        if kind == "r":
            for j in by_row.get(idx, ()):
                if np.isnan(v[j]):
                    v[j] = cost[idx, j] - u[idx]
                    queue.append(("c", j))
        else:
            for i in by_col.get(idx, ()):
                if np.isnan(u[i]):
                    u[i] = cost[i, idx] - v[idx]
                    queue.append(("r", i))
    if np.isnan(u).any() or np.isnan(v).any():
        raise RuntimeError("transportation basis is not a spanning tree")
    return u, v


def _tree_path(basis: list[tuple[int, int]], start_row: int, end_col: int) -> list[tuple[int, int]]:
    """Basic cells on the tree path from row ``start_row`` to column ``end_col``."""
    adj: dict[tuple[str, int], list[tuple[tuple[str, int], tuple[int, int]]]] = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    start, goal = ("r", start_row), ("c", end_col)
    prev: dict[tuple[str, int], tuple[tuple[str, int], tuple[int, int]] | None] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt, cell in adj.get(node, ()):
            if nxt not in prev:
                prev[nxt] = (node, cell)
                queue.append(nxt)
    cells = []
    node = goal
    while prev[node] is not None:
        node, cell = prev[node]
        cells.append(cell)
    # ordered from end_col back to start_row
    return cells


def transport_simplex(supply, demand, cost, max_iter: int = 500) -> np.ndarray:
    """Exact optimal plan of a balanced transportation problem (MODI method)."""
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    cost = np.asarray(cost, dtype=float)
    plan, basis = _vogel(supply, demand, cost)
    scale = max(1.0, float(np.abs(cost).max()))
    for _ in range(max_iter):
        u, v = _potentials(cost, basis)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0
        i0, j0 = np.unravel_index(int(np.argmin(reduced)), reduced.shape)
        if reduced[i0, j0] >= -1e-13 * scale:
            return plan
        path = _tree_path(basis, int(i0), int(j0))
        minus = path[0::2]
        plus = path[1::2]
        theta = min(plan[c] for c in minus)
        leaving = next(c for c in minus if plan[c] == theta)
        for c in minus:
            plan[c] -= theta
        for c in plus:
            plan[c] += theta
        plan[i0, j0] += theta
        plan[leaving] = 0.0
        basis.remove(leaving)
        basis.append((int(i0), int(j0)))
    raise RuntimeError("transportation simplex did not converge")


def wasserstein2(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple[float, TransportPlan]:
    """Wasserstein-2 distance with quadratic ground cost and an optimal coupling."""
    for dist in (p, q):
        if abs(sum(dist.weights) - 1) > TOL_HERM:
            raise ValueError("inputs must be normalized")
    # solve in a canonical orientation so that swapping the arguments is exactly symmetric
    swap = (q.values, q.weights) < (p.values, p.weights)
    src, dst = (q, p) if swap else (p, q)
    cost = squared_cost(src.values, dst.values)
    plan = transport_simplex(src.weights, dst.weights, cost)
    total = float(np.sum(plan * cost))
    if swap:
        plan = plan.T
    value = sqrt_above_roundoff(total, float(cost.max()))
    return value, TransportPlan(p.values, q.values, plan, total)


def sorted_coupling_cost(x, px: np.ndarray, y, qy: np.ndarray) -> np.ndarray:
    """Squared W2 for a batch of 1-D distributions on fixed supports.

    Uses the monotone (quantile) coupling, which is optimal on the real
    line for convex costs.  ``px`` has shape ``(batch, len(x))`` and ``qy``
    ``(batch, len(y))``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ox, oy = np.argsort(x), np.argsort(y)
    x, y = x[ox], y[oy]
    px = np.clip(np.atleast_2d(px)[:, ox], 0.0, None)
    qy = np.clip(np.atleast_2d(qy)[:, oy], 0.0, None)
    fx = np.cumsum(px, axis=1)
    fy = np.cumsum(qy, axis=1)
    fx /= fx[:, -1:]
    fy /= fy[:, -1:]
    t = np.sort(np.concatenate([np.zeros((fx.shape[0], 1)), fx, fy], axis=1), axis=1)
    widths = np.diff(t, axis=1)
    mid = 0.5 * (t[:, 1:] + t[:, :-1])
    ix = np.minimum((fx[:, None, :] < mid[:, :, None]).sum(-1), len(x) - 1)
    iy = np.minimum((fy[:, None, :] < mid[:, :, None]).sum(-1), len(y) - 1)
    return np.sum(widths * (x[ix] - y[iy]) ** 2, axis=1)


# -- distance between observables --------------------------------------------


def fibonacci_sphere(n: int = GRID_POINTS) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + np.sqrt(5)) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _pure_state_probs(obs: DiscreteObservable, r: np.ndarray) -> np.ndarray:
    """Outcome probabilities for the pure qubit states with Bloch vectors ``r`` (rows)."""
    coef = np.array([[c0, *c] for c0, c in map(bloch_coefficients, obs.effects)])
    # tr(rho E) = c0 + c . r for rho = (1 + r.sigma)/2 and E = c0 + c.sigma
    return coef[:, 0][None, :] + np.atleast_2d(r) @ coef[:, 1:].T


@dataclass(frozen=True)
class ObservableDistance:
    value: float
    squared: float
    maximizer: np.ndarray


def delta2_search(
    a: DiscreteObservable,
    c: DiscreteObservable,
    grid_points: int = GRID_POINTS,
    refine_starts: int = REFINE_STARTS,
) -> ObservableDistance:
    """Supremum over qubit states of the W2 distance between outcome statistics.

    The squared distance is a convex function of the state (a minimum of
    linear functions of the two marginals, each linear in the state), so
    only pure states are searched: a Fibonacci grid on the Bloch sphere
    followed by Nelder-Mead refinement from the best grid points.
    """
    if a.dim != c.dim:
        raise ValueError("observable dimensions differ")
    if a.dim != 2:
        raise PreconditionError("distance between observables is only implemented for qubits")

    def objective(r: np.ndarray) -> np.ndarray:
        return sorted_coupling_cost(a.values, _pure_state_probs(a, r), c.values, _pure_state_probs(c, r))

    grid = fibonacci_sphere(grid_points)
    vals = objective(grid)
    starts = grid[np.argsort(vals)[::-1][:refine_starts]]

    best_r, best_val = grid[int(np.argmax(vals))], float(vals.max())
    for r0 in starts:
        # local chart: r(u) = normalize(r0 + u[0] e1 + u[1] e2) with e1, e2 tangent at r0
        e1 = np.cross(r0, [1.0, 0.0, 0.0] if abs(r0[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(r0, e1)

        def chart(u, r0=r0, e1=e1, e2=e2):
            v = r0 + u[0] * e1 + u[1] * e2
            return v / np.linalg.norm(v)

        res = minimize(
            lambda u: -objective(chart(u))[0],
            np.zeros(2),
            method="Nelder-Mead",
            options={"xatol": REFINE_XTOL, "fatol": 1e-15, "maxiter": 2000,
                     "initial_simplex": [[0.0, 0.0], [0.05, 0.0], [0.0, 0.05]]},
        )
        if -res.fun > best_val:
            best_val, best_r = float(-res.fun), chart(res.x)

    # report the exact transport value at the maximizer
    rho = QuantumState.from_bloch(best_r)
    d2, _ = wasserstein2(distribution_of(a, rho), distribution_of(c, rho))
    return ObservableDistance(value=d2, squared=d2 * d2, maximizer=best_r)


def delta2_observables(a: DiscreteObservable, c: DiscreteObservable) -> float:
    """Worst-case W2 distance between the statistics of ``a`` and ``c``."""
    return delta2_search(a, c).value
