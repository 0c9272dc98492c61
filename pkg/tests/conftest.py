"""Shared fixtures and the brute-force LP oracle used against the solver."""

from __future__ import annotations

from itertools import combinations, product

import numpy as np
import pytest

from lrthresh import LinearProgram


@pytest.fixture
def rng():
    return np.random.default_rng(20250822)


def enumerate_lp_optimum(lp: LinearProgram) -> tuple[str, float | None]:
    """Exhaustive optimum of a small finite-bounded LP via basis enumeration.

    Every vertex of {A x = b, l <= x <= u} has r basic coordinates and the
    rest at a bound, so trying all bases and all bound placements finds the
    exact optimum. Intended for num_vars <= 6 only.
    """
    A = lp.dense_matrix()
    b = np.asarray(lp.eq_rhs, dtype=float)
    c = np.asarray(lp.objective, dtype=float)
    lower = np.asarray(lp.lower, dtype=float)
    upper = np.asarray(lp.upper, dtype=float)
    n, r = lp.num_vars, lp.num_rows
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("oracle needs finite bounds")

    if r == 0:
        x = np.where(c >= 0, lower, upper)
        return "optimal", float(c @ x)

    best = None
    for basis in combinations(range(n), r):
        basis = list(basis)
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        nonbasic = [j for j in range(n) if j not in basis]
        for placement in product((False, True), repeat=len(nonbasic)):
            x = np.empty(n)
            for j, hi in zip(nonbasic, placement):
                x[j] = upper[j] if hi else lower[j]
            rhs = b - A[:, nonbasic] @ x[nonbasic] if nonbasic else b
            x[basis] = np.linalg.solve(B, rhs)
            if np.all(x >= lower - 1e-9) and np.all(x <= upper + 1e-9):
                val = float(c @ np.clip(x, lower, upper))
                if best is None or val < best:
                    best = val
    if best is None:
        return "infeasible", None
    return "optimal", best


def random_bounded_lp(rng: np.random.Generator, feasible: bool = True) -> LinearProgram:
    """A small random equality LP with finite box bounds.

    feasible=True plants an interior point; feasible=False shifts the rhs far
    outside the reachable range, which usually (not always) breaks
    feasibility — the oracle supplies the ground truth either way.
    """
    n = int(rng.integers(3, 7))
    r = int(rng.integers(1, min(4, n)))
    A = rng.normal(size=(r, n))
    lower = rng.uniform(-1.0, 0.0, size=n)
    upper = lower + rng.uniform(0.5, 2.0, size=n)
    x0 = lower + rng.uniform(0.1, 0.9, size=n) * (upper - lower)
    b = A @ x0
    if not feasible:
        b = b + rng.choice([-1.0, 1.0], size=r) * rng.uniform(50.0, 100.0, size=r)
    c = rng.normal(size=n)
    return LinearProgram(objective=c, eq_matrix=A, eq_rhs=b, lower=lower, upper=upper)
