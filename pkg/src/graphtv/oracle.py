"""Independent ground truth for small instances.

Nothing here shares code with the sweep updates: the brute-force minimizer
works on the primal energy over a product grid, and the dual-ball checks
compute the dual norm exhaustively from vertex subsets.  These are the
references the solver is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import divergence, _as_vertex_field
from .model import RofProblem, dual_objective, fixed_point_residual
from .solver import sweep_sequential

__all__ = [
    "solve_single_edge",
    "solve_bruteforce",
    "bv_dual_norm_exhaustive",
    "DualBallReport",
    "verify_dual_ball",
    "check_certificate",
]

BRUTEFORCE_MAX_VERTICES = 6


def solve_single_edge(u0_i, u0_j, t):
    """Closed-form minimizer for a two-vertex, one-edge instance.

    The optimal flow is c = clamp((u0_j - u0_i) / 2, -t, t) and the
    minimizer moves each endpoint toward the other by c.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    c = min(max((u0_j - u0_i) / 2.0, -t), t)
    return (u0_i + c, u0_j - c)


def solve_bruteforce(problem, grid_step, range_pad=0.5, points_per_axis=9):
    """Grid search for the primal minimizer, refined around the incumbent.

    Starts from a product grid spanning [min u0 - range_pad, max u0 +
    range_pad] on every coordinate and repeatedly re-grids a window of two
    old steps around the best point until the step drops below
    ``grid_step``.  Intended purely as a test oracle on graphs with at most
    ``BRUTEFORCE_MAX_VERTICES`` vertices.
    """
    n = problem.graph.num_vertices
    if n > BRUTEFORCE_MAX_VERTICES:
        raise ValueError(f"brute force limited to N <= {BRUTEFORCE_MAX_VERTICES}, got {n}")
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    if points_per_axis < 3:
        raise ValueError("points_per_axis must be >= 3")

    u0 = problem.u0
    i_idx = problem.graph.edges[:, 0]
    j_idx = problem.graph.edges[:, 1]
    t = problem.t

    lo = float(u0.min()) - range_pad
    hi = float(u0.max()) + range_pad
    centers = np.full(n, 0.5 * (lo + hi))
    half = 0.5 * (hi - lo)

    p = points_per_axis
    offsets = np.linspace(-1.0, 1.0, p)
    # all p^n offset combinations, shape (p^n, n)
    mesh = np.meshgrid(*([offsets] * n), indexing="ij")
    combos = np.stack([m.ravel() for m in mesh], axis=-1)

    while True:
        candidates = centers + half * combos
        resid = candidates - u0
        energies = 0.5 * np.einsum("rn,rn->r", resid, resid)
        if i_idx.size:
            energies = energies + t * np.abs(
                candidates[:, j_idx] - candidates[:, i_idx]
            ).sum(axis=1)
        best = int(np.argmin(energies))
        centers = candidates[best]
        step = 2.0 * half / (p - 1)
        if step <= grid_step:
            return centers.copy()
        half = 2.0 * step  # window of +-2 old steps, halving the step each round


def bv_dual_norm_exhaustive(graph, psi):
    """Dual norm of a mean-zero vertex field, exact on tiny graphs.

    Every field h with total variation 1 is a convex combination of scaled
    vertex-subset indicators (sum the level sets of h), so the supremum of
    <psi, h> over that ball is attained on an indicator: the norm equals

        max over proper nonempty subsets A of |sum_{v in A} psi(v)| / cut(A)

    where cut(A) counts edges with exactly one endpoint in A.  Returns
    ``inf`` when some subset with cut zero carries nonzero mass (psi is then
    not a divergence at all).
    """
    psi = _as_vertex_field(graph, psi, "psi")
    n = graph.num_vertices
    if n > 12:
        raise ValueError("subset enumeration limited to N <= 12")
    i_idx = graph.edges[:, 0]
    j_idx = graph.edges[:, 1]
    best = 0.0
    for size in range(1, n // 2 + 1):
        for subset in combinations(range(n), size):
            mask = np.zeros(n, dtype=bool)
            mask[list(subset)] = True
            if 2 * size == n and not mask[0]:
                continue  # complement already seen; |<psi, 1_A>| matches it
            cut = int(np.count_nonzero(mask[i_idx] != mask[j_idx]))
            mass = abs(float(psi[mask].sum()))
            if cut == 0:
                if mass > 1e-14:
                    return float("inf")
                continue
            best = max(best, mass / cut)
    return best


@dataclass
class DualBallReport:
    """Outcome of the two dual-ball inclusion checks."""

    max_norm_excess: float  # worst (dual norm of div g) - t over sampled flows
    max_preimage_residual: float  # worst ||psi - div g|| over sampled fields
    flow_samples: int
    field_samples: int

    def passed(self, tol=1e-6):
        return self.max_norm_excess <= tol and self.max_preimage_residual <= tol


def verify_dual_ball(graph, t, samples=20, seed=0, max_sweeps=50_000):
    """Check numerically that divergences of box-bounded flows fill exactly
    the scaled dual ball.

    Direction one: for sampled flows with ||g||_inf <= t (half uniform in the
    box, half from its corners), the dual norm of div g must not exceed t.
    The norm is computed exhaustively from vertex subsets; random mean-zero
    test fields additionally confirm the exhaustive value is an upper bound
    on sampled Rayleigh quotients.

    Direction two: sampled mean-zero fields scaled to dual norm <= t must
    admit a flow in the box whose divergence reproduces them; the flow is
    found by running the edge updates against the field as data and the
    reached distance ||psi - div g|| is reported.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    n = graph.num_vertices
    m = graph.num_edges
    if n > 6 or m > 10:
        raise ValueError("dual-ball verification limited to N <= 6, M <= 10")
    rng = np.random.Generator(np.random.Philox(seed))

    max_excess = 0.0
    flow_samples = 0
    for s in range(samples):
        if s % 2 == 0:
            g = rng.uniform(-t, t, size=m)
        else:
            g = t * rng.choice([-1.0, 1.0], size=m)
        psi = divergence(graph, g)
        norm = bv_dual_norm_exhaustive(graph, psi)
        max_excess = max(max_excess, norm - t)
        flow_samples += 1
        # sampled Rayleigh quotients can only fall below the exhaustive norm
        for _ in range(8):
            h = rng.standard_normal(n)
            h -= h.mean()
            tv = float(np.abs(h[graph.edges[:, 1]] - h[graph.edges[:, 0]]).sum())
            if tv > 1e-12:
                quotient = abs(float(np.dot(psi, h))) / tv
                max_excess = max(max_excess, quotient - t)

    max_residual = 0.0
    field_samples = 0
    scales = (0.25, 0.5, 0.75, 1.0)
    for s in range(samples):
        psi = rng.standard_normal(n)
        psi -= psi.mean()
        norm = bv_dual_norm_exhaustive(graph, psi)
        if not np.isfinite(norm) or norm <= 1e-12:
            continue
        psi *= scales[s % len(scales)] * t / norm
        target = RofProblem(graph, psi, t)
        g = np.zeros(m)
        residual = dual_objective(target, g)
        for _ in range(max_sweeps):
            if residual <= 1e-9:
                break
            g = sweep_sequential(target, g)
            residual = dual_objective(target, g)
        max_residual = max(max_residual, residual)
        field_samples += 1

    return DualBallReport(
        max_norm_excess=max_excess,
        max_preimage_residual=max_residual,
        flow_samples=flow_samples,
        field_samples=field_samples,
    )


def check_certificate(problem, u, g, tol):
    """True when (u, g) certify each other: u = u0 - div g within tol and g
    is within tol of a fixed point of every edge update.

    A passing pair pins u to the energy minimizer up to solver tolerance.
    Infeasible flows fail rather than raise.
    """
    u = _as_vertex_field(problem.graph, u, "u")
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (problem.graph.num_edges,):
        return False
    if g.size and float(np.abs(g).max()) > problem.t:
        return False
    reconstructed = problem.u0 - divergence(problem.graph, g)
    if float(np.abs(u - reconstructed).max()) > tol:
        return False
    return fixed_point_residual(problem, g) <= tol
