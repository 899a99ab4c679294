"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_w2_sq(x, p, y, q, tol: float = 1e-12) -> float:
    """Minimum of the quadratic transport cost over every vertex of the transportation polytope.

    A vertex is a basic feasible solution: m + n - 1 cells whose constraint
    columns are independent, solved exactly and found nonnegative.
    """
    x, p, y, q = map(lambda a: np.asarray(a, dtype=float), (x, p, y, q))
    m, n = len(x), len(y)
    cells = [(i, j) for i in range(m) for j in range(n)]
    rhs = np.concatenate([p, q])
    cost = (x[:, None] - y[None, :]) ** 2
    best = np.inf
    for subset in itertools.combinations(cells, m + n - 1):
        a = np.zeros((m + n, len(subset)))
        for col, (i, j) in enumerate(subset):
            a[i, col] = 1.0
            a[m + j, col] = 1.0
        if np.linalg.matrix_rank(a) < len(subset):
            continue
        sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        if np.max(np.abs(a @ sol - rhs)) > 1e-12 or sol.min() < -tol:
            continue
        best = min(best, sum(cost[c] * s for c, s in zip(subset, sol)))
    return float(best)


def closed_form_circuit_probabilities(alpha, beta, gamma, theta) -> dict:
    """The eight outcome probabilities of the circuit, expanded by hand."""
    g = 2 * gamma**2 - 1
    gp = np.sqrt(max(1 - gamma**2, 0.0))
    mx = (alpha * np.conj(beta) + np.conj(alpha) * beta).real
    mz = abs(alpha) ** 2 - abs(beta) ** 2
    s, c2 = np.sin(2 * theta), np.cos(2 * theta)
    out = {}
    for k in (1, -1):
        for l in (1, -1):
            for n in (1, -1):
                kg = k * g  # (2g^2-1) for Z_p=+, (1-2g^2) for Z_p=-
                out[k, l, n] = (1 + kg * mx + l * s * (kg + mx) + n * 2 * gamma * gp * mz * c2) / 8
    return out


def closed_form_operational_zp_xf(gamma, theta, mean_x) -> dict:
    """Hand-expanded P(Z_p, X_f) for the object state with mean X ``mean_x``."""
    g = 2 * gamma**2 - 1
    s = np.sin(2 * theta)
    return {
        (1, 1): 0.25 * ((1 + s * g) + (g + s) * mean_x),
        (-1, 1): 0.25 * ((1 - s * g) - (g - s) * mean_x),
        (1, -1): 0.25 * ((1 - s * g) + (g - s) * mean_x),
        (-1, -1): 0.25 * ((1 + s * g) - (g + s) * mean_x),
    }


def closed_form_weak_valued(theta, mean_x) -> dict:
    """Weak-valued probabilities of the deviations +2 and -2."""
    s = np.sin(2 * theta)
    return {2: 0.5 * (1 - s) * 0.5 * (1 - mean_x), -2: 0.5 * (1 - s) * 0.5 * (1 + mean_x)}


def eig2_hermitian(m) -> tuple[float, float]:
    """Eigenvalues of a 2x2 Hermitian matrix from the characteristic polynomial."""
    a, d = m[0, 0].real, m[1, 1].real
    b = m[0, 1]
    tr, det = a + d, a * d - abs(b) ** 2
    disc = np.sqrt(max(tr * tr / 4 - det, 0.0))
    return tr / 2 - disc, tr / 2 + disc


def matmul_loops(a, b):
    """Plain triple-loop matrix product."""
    n, k = len(a), len(b[0])
    out = [[0j] * k for _ in range(n)]
    for i in range(n):
        for j in range(k):
            out[i][j] = sum(a[i][t] * b[t][j] for t in range(len(b)))
    return np.array(out)
