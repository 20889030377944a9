"""The denoising functional on a graph and its dual-side optimality measures.

The primal problem: given data u0 on the vertices and t > 0, minimize

    E(u) = 1/2 * ||u0 - u||_2^2  +  t * sum_e |grad u(e)|

over vertex fields u.  The minimizer equals ``u0 - div g*`` where g* is any
flow in the box ||g||_inf <= t whose divergence is the closest point of the
scaled dual ball to u0; the solver searches for such a flow by cyclic
per-edge updates.  This module holds the energies and the per-edge
fixed-point residual that certifies optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, divergence, gradient, _as_edge_flow, _as_vertex_field

__all__ = [
    "RofProblem",
    "bv_seminorm",
    "rof_energy",
    "dual_objective",
    "edge_update_targets",
    "fixed_point_residual",
]


@dataclass(frozen=True)
class RofProblem:
    """A denoising instance: graph, observed vertex data u0, and weight t > 0."""

    graph: Graph
    u0: np.ndarray
    t: float

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=np.float64)
        if u0.shape != (self.graph.num_vertices,):
            raise ValueError(
                f"u0 has shape {u0.shape}, expected ({self.graph.num_vertices},)"
            )
        if not np.all(np.isfinite(u0)):
            raise ValueError("u0 must be finite")
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        t = float(self.t)
        if not (t > 0 and np.isfinite(t)):
            raise ValueError(f"t must be a positive real, got {self.t}")
        object.__setattr__(self, "t", t)


def bv_seminorm(graph, u):
    """Anisotropic total variation: l1 norm of the gradient of u.

    Zero exactly when u is constant on every connected component.
    """
    return float(np.abs(gradient(graph, u)).sum())


def rof_energy(problem, u):
    """Primal objective 1/2 * ||u0 - u||^2 + t * bv_seminorm(u)."""
    u = _as_vertex_field(problem.graph, u, "u")
    r = problem.u0 - u
    return 0.5 * float(np.dot(r, r)) + problem.t * bv_seminorm(problem.graph, u)


def dual_objective(problem, g):
    """Distance ||u0 - div g||_2 minimized by the dual iteration."""
    g = _as_edge_flow(problem.graph, g)
    return float(np.linalg.norm(problem.u0 - divergence(problem.graph, g)))


def edge_update_targets(problem, g, div=None):
    """Unconstrained per-edge minimizers of the local two-endpoint quadratic.

    For edge k = (i, j) the value is half the difference of the data residuals
    at the endpoints once the flow on k itself is discounted:

        K[k] = ((u0[j] - (div[j] - g[k])) - (u0[i] - (div[i] + g[k]))) / 2

    Clamping K[k] to [-t, t] gives the flow value the edge update installs.
    A flow is optimal exactly when every entry already equals its clamped
    target.  ``div`` may be supplied to reuse a precomputed divergence.
    """
    g = _as_edge_flow(problem.graph, g)
    if div is None:
        div = divergence(problem.graph, g)
    u0 = problem.u0
    i = problem.graph.edges[:, 0]
    j = problem.graph.edges[:, 1]
    return 0.5 * ((u0[j] - (div[j] - g)) - (u0[i] - (div[i] + g)))


def fixed_point_residual(problem, g):
    """Max over edges of |clamp(K[k], -t, t) - g[k]|.

    Zero exactly at flows left unchanged by every edge update, which is
    equivalent to u0 - div g being the minimizer of the primal energy.
    Raises ValueError if g lies outside the box ||g||_inf <= t.
    """
    g = _as_edge_flow(problem.graph, g)
    t = problem.t
    if g.size and float(np.abs(g).max()) > t:
        raise ValueError("flow lies outside the feasible box [-t, t]")
    if g.size == 0:
        return 0.0
    k = edge_update_targets(problem, g)
    clamped = np.minimum(np.maximum(k, -t), t)
    return float(np.abs(clamped - g).max())
