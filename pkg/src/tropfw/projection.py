"""Tropical projection onto tropical polytopes and Bergman fans.

The general route projects onto the tropical convex hull of the fan's
vertex set (one vertex per maximal proper flat).  For cycle matroids of
complete graphs the projection is the subdominant ultrametric, computed in
polynomial time from minimax path weights on a minimum spanning tree.  Both
routes only copy and compare input entries, so exact scalar types survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DegeneratePolytope, DimensionMismatch
from .matroid import Matroid, complete_graph_edges, maximal_proper_flats
from .tropical import as_vector, d_tr


@dataclass(frozen=True)
class PolytopeVertexSet:
    """Vertices of a tropical polytope; ``None`` entries stand for minus infinity.

    Minus infinity never enters arithmetic: a ``None`` coordinate simply
    makes a vertex ineligible for the min/max it would participate in.
    """

    vertices: tuple

    def __post_init__(self):
        verts = tuple(tuple(v) for v in self.vertices)
        if not verts:
            raise ValueError("a tropical polytope needs at least one vertex")
        dim = len(verts[0])
        for v in verts:
            if len(v) != dim:
                raise DimensionMismatch("vertices of unequal length")
            if all(c is None for c in v):
                raise ValueError("vertex with every coordinate at minus infinity")
        object.__setattr__(self, "vertices", verts)

    @property
    def dim(self) -> int:
        return len(self.vertices[0])


def bergman_vertex_set(m: Matroid) -> PolytopeVertexSet:
    """Vertex per maximal proper flat F: minus infinity on F, zero elsewhere."""
    verts = []
    for flat in maximal_proper_flats(m):
        verts.append(tuple(None if e in flat.elements else 0 for e in range(m.ground_size)))
    return PolytopeVertexSet(tuple(verts))


def project_polytope(vertex_set: PolytopeVertexSet, x) -> np.ndarray:
    """Nearest point of the tropical polytope under the symmetric distance.

    Returns max_i (lambda_i + v_i) with lambda_i = min over finite entries of
    (x - v_i); the standard tropical projection formula.
    """
    xv = as_vector(x)
    if xv.shape[0] != vertex_set.dim:
        raise DimensionMismatch(f"point has length {xv.shape[0]}, polytope lives in {vertex_set.dim}")
    verts = vertex_set.vertices
    for j in range(vertex_set.dim):
        if all(v[j] is None for v in verts):
            raise DegeneratePolytope(f"coordinate {j} is minus infinity in every vertex")
    lambdas = [min(xv[e] - v[e] for e in range(len(v)) if v[e] is not None) for v in verts]
    out = []
    for j in range(vertex_set.dim):
        out.append(max(lam + v[j] for lam, v in zip(lambdas, verts) if v[j] is not None))
    return np.array(out, dtype=xv.dtype)


def project_ultrametric_fast(p: int, x) -> np.ndarray:
    """Subdominant ultrametric of a vector indexed by the edges of K_p.

    Output entry (i,j) is the minimax path weight from i to j, read off a
    minimum spanning tree; equals the Bergman-fan projection for the cycle
    matroid of K_p.
    """
    xv = as_vector(x)
    q = comb(p, 2)
    if xv.shape[0] != q:
        raise DimensionMismatch(f"expected length {q} for p={p}, got {xv.shape[0]}")
    edges = complete_graph_edges(p)

    parent = list(range(p))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    order = sorted(range(q), key=lambda k: (xv[k], k))
    adjacency = [[] for _ in range(p)]
    taken = 0
    for k in order:
        i, j = edges[k]
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            adjacency[i].append((j, xv[k]))
            adjacency[j].append((i, xv[k]))
            taken += 1
            if taken == p - 1:
                break

    out = np.empty(q, dtype=xv.dtype)
    index = {e: k for k, e in enumerate(edges)}
    for src in range(p):
        best = {src: None}
        stack = [src]
        while stack:
            cur = stack.pop()
            for nxt, weight in adjacency[cur]:
                if nxt in best:
                    continue
                cur_max = best[cur]
                best[nxt] = weight if (cur_max is None or weight > cur_max) else cur_max
                stack.append(nxt)
        for dst in range(src + 1, p):
            out[index[(src, dst)]] = best[dst]
    return out


def project_bergman(m: Matroid, x) -> np.ndarray:
    """Subdominant M-ultrametric: the largest fan point below x coordinatewise."""
    if m.graphic_vertices is not None:
        return project_ultrametric_fast(m.graphic_vertices, x)
    return project_polytope(bergman_vertex_set(m), x)


def check_nonexpansive(m: Matroid, x, y, tol: float = 1e-12) -> bool:
    """Test hook: projection never increases the symmetric tropical distance."""
    return d_tr(project_bergman(m, x), project_bergman(m, y)) <= d_tr(x, y) + tol
