"""Self-contained correctness checks runnable from the command line.

Each check returns (ok, detail) and is independent of the others.  The
``clamp_skew`` knob inflates the flow bound the solver works with relative
to the bound being certified; any nonzero skew must trip the suite, which
makes the suite itself testable.
"""

from __future__ import annotations

import numpy as np

from .graph import (
    Graph,
    divergence,
    gradient,
    inner_product_edges,
    inner_product_vertices,
)
from .model import RofProblem
from .oracle import (
    check_certificate,
    solve_bruteforce,
    solve_single_edge,
    verify_dual_ball,
)
from .solver import SolverConfig, solve

__all__ = ["CHECK_NAMES", "run_checks", "random_connected_graph"]


def random_connected_graph(rng, num_vertices, extra_edges=2):
    """Random spanning tree plus a few extra non-loop edges.

    Edge directions are random; duplicates among the extras are allowed
    (parallel edges are legal).
    """
    edges = []
    for v in range(1, num_vertices):
        u = int(rng.integers(0, v))
        if rng.random() < 0.5:
            edges.append((u, v))
        else:
            edges.append((v, u))
    for _ in range(extra_edges):
        i = int(rng.integers(0, num_vertices))
        j = int(rng.integers(0, num_vertices))
        if i != j:
            edges.append((i, j))
    return Graph(num_vertices, edges)


def _solve_skewed(problem, config, clamp_skew):
    """Solve with the flow bound inflated by (1 + clamp_skew).

    The returned flow is certified against the original bound, so any skew
    shows up as a broken certificate or a wrong minimizer.
    """
    skewed = RofProblem(problem.graph, problem.u0, problem.t * (1.0 + clamp_skew))
    return solve(skewed, config)


def _check_adjointness(rng, clamp_skew):
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        graph = random_connected_graph(rng, n, extra_edges=int(rng.integers(0, 5)))
        for _ in range(10):
            f = rng.standard_normal(graph.num_vertices)
            g = rng.standard_normal(graph.num_edges)
            lhs = inner_product_vertices(divergence(graph, g), f)
            rhs = inner_product_edges(g, gradient(graph, f))
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    ok = worst <= 1e-12
    return ok, f"max scaled adjointness defect {worst:.3e} (limit 1e-12)"


def _check_divergence_zero_sum(rng, clamp_skew):
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 51))
        graph = random_connected_graph(rng, n, extra_edges=int(rng.integers(0, 5)))
        g = rng.standard_normal(graph.num_edges)
        total = abs(float(divergence(graph, g).sum()))
        scale = float(np.abs(g).sum()) or 1.0
        worst = max(worst, total / scale)
    ok = worst <= 1e-12
    return ok, f"max |sum div g| / ||g||_1 = {worst:.3e} (limit 1e-12)"


def _check_closed_form_pairs(rng, clamp_skew):
    graph = Graph(2, [(0, 1)])
    worst = 0.0
    for t, expected in ((1.0, (1.0, 3.0)), (3.0, (2.0, 2.0))):
        problem = RofProblem(graph, np.array([0.0, 4.0]), t)
        cfg = SolverConfig(epsilon=1e-12, max_iterations=100,
                           schedule="sequential", stopping="fixed_point_residual")
        u, _, _ = _solve_skewed(problem, cfg, clamp_skew)
        worst = max(worst, float(np.abs(u - np.array(expected)).max()))
    ok = worst <= 1e-12
    return ok, f"max deviation from closed form {worst:.3e} (limit 1e-12)"


def _check_single_edge_oracle(rng, clamp_skew):
    graph = Graph(2, [(0, 1)])
    worst = 0.0
    for _ in range(25):
        a, b = rng.uniform(-5, 5, size=2)
        t = float(rng.uniform(0.05, 3.0))
        expected = solve_single_edge(a, b, t)
        problem = RofProblem(graph, np.array([a, b]), t * (1.0 + clamp_skew))
        found = solve_bruteforce(problem, grid_step=1e-7)
        worst = max(worst, float(np.abs(found - np.array(expected)).max()))
    ok = worst <= 1e-6
    return ok, f"max closed-form vs brute-force gap {worst:.3e} (limit 1e-6)"


def _check_solver_vs_bruteforce(rng, clamp_skew):
    worst = 0.0
    for trial in range(12):
        n = int(rng.integers(2, 6))
        graph = random_connected_graph(rng, n, extra_edges=int(rng.integers(0, 3)))
        u0 = rng.uniform(0.0, 4.0, size=n)
        t = (0.1, 1.0, 10.0)[trial % 3]
        problem = RofProblem(graph, u0, t)
        schedule = ("sequential", "colored")[trial % 2]
        cfg = SolverConfig(epsilon=1e-10, max_iterations=200_000,
                           schedule=schedule, stopping="fixed_point_residual")
        u, _, _ = _solve_skewed(problem, cfg, clamp_skew)
        reference = solve_bruteforce(problem, grid_step=1e-6)
        worst = max(worst, float(np.abs(u - reference).max()))
    ok = worst <= 1e-4
    return ok, f"max solver vs brute-force gap {worst:.3e} (limit 1e-4)"


def _check_certificates(rng, clamp_skew):
    for trial in range(8):
        n = int(rng.integers(2, 6))
        graph = random_connected_graph(rng, n, extra_edges=1)
        u0 = rng.uniform(0.0, 4.0, size=n)
        problem = RofProblem(graph, u0, 1.0)
        cfg = SolverConfig(epsilon=1e-10, max_iterations=200_000,
                           schedule="sequential", stopping="fixed_point_residual")
        u, g, _ = _solve_skewed(problem, cfg, clamp_skew)
        if not check_certificate(problem, u, g, tol=1e-9):
            return False, f"converged output rejected on trial {trial}"
        perturbed = np.array(g)
        perturbed[0] += 0.01 * problem.t
        if check_certificate(problem, u, perturbed, tol=1e-9):
            return False, f"perturbed flow accepted on trial {trial}"
    return True, "all converged outputs certified; perturbed flows rejected"


def _dual_ball_check(build):
    def run(rng, clamp_skew):
        graph, t = build()
        report = verify_dual_ball(graph, t, samples=20, seed=7)
        ok = report.passed(tol=1e-6)
        detail = (
            f"norm excess {report.max_norm_excess:.3e}, "
            f"pre-image residual {report.max_preimage_residual:.3e} (limit 1e-6)"
        )
        return ok, detail

    return run


def _single_edge():
    return Graph(2, [(0, 1)]), 1.0


def _two_path():
    return Graph(3, [(0, 1), (1, 2)]), 1.0


def _three_cycle():
    return Graph(3, [(0, 1), (1, 2), (2, 0)]), 1.0


def _grid_2x2():
    from .imaging import grid_graph

    return grid_graph(2, 2), 1.0


_CHECKS = [
    ("adjointness", _check_adjointness),
    ("divergence-zero-sum", _check_divergence_zero_sum),
    ("closed-form-pairs", _check_closed_form_pairs),
    ("single-edge-oracle", _check_single_edge_oracle),
    ("solver-vs-bruteforce", _check_solver_vs_bruteforce),
    ("certificates", _check_certificates),
    ("dual-ball-single-edge", _dual_ball_check(_single_edge)),
    ("dual-ball-two-path", _dual_ball_check(_two_path)),
    ("dual-ball-three-cycle", _dual_ball_check(_three_cycle)),
    ("dual-ball-grid-2x2", _dual_ball_check(_grid_2x2)),
]

CHECK_NAMES = tuple(name for name, _ in _CHECKS)


def run_checks(clamp_skew=0.0, seed=12345):
    """Run every check; returns a list of (name, ok, detail)."""
    results = []
    for name, fn in _CHECKS:
        rng = np.random.Generator(np.random.Philox(seed))
        ok, detail = fn(rng, clamp_skew)
        results.append((name, bool(ok), detail))
    return results
