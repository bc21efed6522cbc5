"""Matroids presented by their circuit lists, and Bergman-fan queries.

The fan membership test, cone signatures, the distance to the cone boundary
(w_min) and its explicit boundary witness are all quantified over circuits,
so matroids keep an explicit circuit list plus bitmask mirrors for speed.
Ground elements are 0-based indices; the text serialization is 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import InitVar, dataclass
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityExceeded, DegeneratePoint, DimensionMismatch, NotInFan
from .tropical import as_vector

#: tolerance used to decide argmax ties on float vectors
ARGMAX_TOL = 1e-9

#: weak circuit elimination is verified at construction up to this ground size
VERIFY_LIMIT = 20

_FLAT_SEARCH_LIMIT = 2_000_000


@dataclass(frozen=True)
class Flat:
    """A closure-closed subset together with its connectivity flag."""

    elements: frozenset
    is_connected: bool


@dataclass(frozen=True)
class Matroid:
    """A loopless connected matroid on ground set {0, ..., ground_size-1}.

    ``graphic_vertices`` is set when the matroid is the cycle matroid of a
    complete graph; it unlocks the structural flat enumeration and the
    minimum-spanning-tree projection route.
    """

    ground_size: int
    circuits: tuple
    graphic_vertices: int | None = None
    verify: InitVar[bool | None] = None

    def __post_init__(self, verify):
        q = self.ground_size
        if q < 2:
            raise ValueError("ground set needs at least two elements")
        canon = []
        seen = set()
        for c in self.circuits:
            fs = frozenset(int(e) for e in c)
            if not fs:
                raise ValueError("empty circuit")
            if len(fs) == 1:
                raise ValueError(f"singleton circuit {set(fs)}: loops are not allowed")
            if any(e < 0 or e >= q for e in fs):
                raise ValueError(f"circuit {sorted(fs)} outside ground set of size {q}")
            if fs not in seen:
                seen.add(fs)
                canon.append(fs)
        if not canon:
            raise ValueError("a connected matroid on q >= 2 elements must have circuits")
        canon.sort(key=lambda c: tuple(sorted(c)))
        object.__setattr__(self, "circuits", tuple(canon))
        masks = tuple(_mask(c) for c in canon)
        object.__setattr__(self, "_masks", masks)
        self._check_incomparable(masks)
        self._check_connected()
        if verify is True or (verify is None and q <= VERIFY_LIMIT):
            self._check_elimination(masks)

    @staticmethod
    def _check_incomparable(masks):
        for a, b in itertools.combinations(masks, 2):
            if a & b in (a, b):
                raise ValueError("circuits must be pairwise incomparable under inclusion")

    def _check_connected(self):
        q = self.ground_size
        covered = np.zeros((q, q), dtype=bool)
        for c in self.circuits:
            idx = sorted(c)
            covered[np.ix_(idx, idx)] = True
        np.fill_diagonal(covered, True)
        if not covered.all():
            i, j = map(int, np.argwhere(~covered)[0])
            raise ValueError(f"matroid is not connected: elements {i} and {j} share no circuit")

    def _check_elimination(self, masks):
        mask_set = set(masks)
        for a, b in itertools.combinations(masks, 2):
            common = a & b
            if not common:
                continue
            union = a | b
            e = common
            while e:
                low = e & -e
                target = union & ~low
                if not any(m & target == m for m in mask_set):
                    raise ValueError("weak circuit elimination fails; input is not a matroid")
                e &= e - 1

    def circuit_masks(self) -> tuple:
        return self._masks


def _mask(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        m |= 1 << int(e)
    return m


def _unmask(mask: int) -> frozenset:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def complete_graph_edges(p: int) -> list:
    """Edges of K_p as vertex pairs (i, j), i < j, in lexicographic order."""
    return [(i, j) for i in range(p) for j in range(i + 1, p)]


def edge_index_map(p: int) -> dict:
    return {e: k for k, e in enumerate(complete_graph_edges(p))}


def graphic_matroid(p: int, verify: bool | None = None) -> Matroid:
    """Cycle matroid of the complete graph on p vertices (q = p choose 2)."""
    if p < 3:
        raise ValueError("need at least three vertices")
    index = edge_index_map(p)
    circuits = []
    for k in range(3, p + 1):
        for subset in itertools.combinations(range(p), k):
            first = subset[0]
            for perm in itertools.permutations(subset[1:]):
                if perm[0] > perm[-1]:
                    continue
                cycle = (first,) + perm
                edges = []
                for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                    edges.append(index[(a, b) if a < b else (b, a)])
                circuits.append(frozenset(edges))
    return Matroid(comb(p, 2), tuple(circuits), graphic_vertices=p, verify=verify)


def graph_matroid(edges: Sequence, verify: bool | None = None) -> Matroid:
    """Cycle matroid of an arbitrary connected graph; parallel edges allowed."""
    edges = [tuple(e) for e in edges]
    if not edges:
        raise ValueError("graph has no edges")
    vertices = sorted({v for e in edges for v in e})
    adjacency = {v: [] for v in vertices}
    for idx, (u, v) in enumerate(edges):
        if u == v:
            raise ValueError(f"self-loop at vertex {u!r}")
        adjacency[u].append((v, idx))
        adjacency[v].append((u, idx))

    reached = {vertices[0]}
    frontier = [vertices[0]]
    while frontier:
        u = frontier.pop()
        for v, _ in adjacency[u]:
            if v not in reached:
                reached.add(v)
                frontier.append(v)
    if reached != set(vertices):
        raise ValueError("graph is not connected")

    order = {v: i for i, v in enumerate(vertices)}
    cycles = set()

    def extend(start, current, used_edges, visited):
        for nxt, idx in adjacency[current]:
            if idx in used_edges:
                continue
            if nxt == start:
                if len(used_edges) >= 1:
                    cycles.add(frozenset(used_edges | {idx}))
            elif nxt not in visited and order[nxt] > order[start]:
                extend(start, nxt, used_edges | {idx}, visited | {nxt})

    for s in vertices:
        extend(s, s, frozenset(), {s})

    return Matroid(len(edges), tuple(cycles), verify=verify)


def _check_dim(m: Matroid, w) -> np.ndarray:
    wv = as_vector(w)
    if wv.shape[0] != m.ground_size:
        raise DimensionMismatch(f"vector length {wv.shape[0]} != ground size {m.ground_size}")
    return wv


def is_m_ultrametric(m: Matroid, w, tol: float = ARGMAX_TOL) -> bool:
    """Whether every circuit attains its maximum at least twice (within tol)."""
    wv = _check_dim(m, w)
    for circuit in m.circuits:
        values = [wv[e] for e in circuit]
        top = max(values)
        if sum(1 for v in values if top - v <= tol) < 2:
            return False
    return True


@dataclass(frozen=True)
class ConeSignature:
    """Per-circuit argmax sets identifying the cone containing a fan point.

    Entries follow the matroid's canonical circuit order, so two signatures
    over the same matroid are comparable positionally.
    """

    matroid: Matroid
    entries: tuple

    def __iter__(self):
        return iter(zip(self.matroid.circuits, self.entries))


def cone_signature(m: Matroid, w, tol: float = ARGMAX_TOL) -> ConeSignature:
    wv = _check_dim(m, w)
    entries = []
    for circuit in m.circuits:
        members = sorted(circuit)
        values = [wv[e] for e in members]
        top = max(values)
        arg = frozenset(e for e, v in zip(members, values) if top - v <= tol)
        if len(arg) < 2:
            raise NotInFan(
                f"argmax of circuit {members} is the single element {set(arg)}"
            )
        entries.append(arg)
    return ConeSignature(m, tuple(entries))


def signature_leq(a: ConeSignature, b: ConeSignature) -> bool:
    """Whether cone(a) is a face of (contained in) cone(b).

    By the nested-argmax characterization this holds exactly when b's argmax
    set is contained in a's argmax set on every circuit.
    """
    if a.matroid != b.matroid:
        raise ValueError("signatures over different matroids are not comparable")
    return all(eb <= ea for ea, eb in zip(a.entries, b.entries))


def _circuit_gaps(m: Matroid, wv, tol):
    """Yield (circuit_position, top, second) for circuits where w is nonconstant."""
    for pos, circuit in enumerate(m.circuits):
        values = [wv[e] for e in circuit]
        top = max(values)
        below = [v for v in values if top - v > tol]
        if below:
            yield pos, top, max(below)


def w_min(m: Matroid, w, tol: float = ARGMAX_TOL):
    """Minimum over nonconstant circuits of (largest - second largest) value.

    For w in the relative interior of a maximal cone this is the tropical
    distance from w to the cone boundary.
    """
    wv = _check_dim(m, w)
    if not is_m_ultrametric(m, wv, tol=tol):
        raise NotInFan("w_min is defined for points of the Bergman fan")
    best = None
    for _, top, second in _circuit_gaps(m, wv, tol):
        gap = top - second
        if best is None or gap < best:
            best = gap
    if best is None:
        raise DegeneratePoint("point is constant on every circuit")
    return best


def boundary_witness(m: Matroid, w, tol: float = ARGMAX_TOL) -> np.ndarray:
    """Point of the cone boundary at tropical distance exactly w_min from w.

    Constructed as w + w_min * indicator(B) where B collects every ground
    element sitting at the second-maximum level of the tightest circuit; its
    argmax sets contain w's on every circuit, strictly on the tight one.
    """
    wv = _check_dim(m, w)
    if not is_m_ultrametric(m, wv, tol=tol):
        raise NotInFan("boundary witness is defined for points of the Bergman fan")
    best = None
    for pos, top, second in _circuit_gaps(m, wv, tol):
        gap = top - second
        if best is None or gap < best[0]:
            best = (gap, second)
    if best is None:
        raise DegeneratePoint("point is constant on every circuit")
    gap, level = best
    u = wv.copy()
    for e in range(m.ground_size):
        diff = wv[e] - level
        if -tol <= diff <= tol:
            u[e] = u[e] + gap
    return u


def closure(m: Matroid, subset: Iterable[int]) -> frozenset:
    """Matroid closure: add e whenever some circuit C satisfies e in C, C - e inside."""
    a = _mask(subset)
    masks = m.circuit_masks()
    changed = True
    while changed:
        changed = False
        for c in masks:
            out = c & ~a
            if out and out & (out - 1) == 0:
                a |= out
                changed = True
    return _unmask(a)


def rank(m: Matroid, subset: Iterable[int]) -> int:
    """Rank via greedy maximal independent subset (independent = no circuit)."""
    masks = m.circuit_masks()
    current = 0
    r = 0
    for e in sorted(set(int(x) for x in subset)):
        bit = 1 << e
        candidate = current | bit
        if any(c & bit and c & candidate == c for c in masks):
            continue
        current = candidate
        r += 1
    return r


def is_connected_flat(m: Matroid, elements: Iterable[int]) -> bool:
    """Whether the restriction to the flat is connected (circuit-sharing relation)."""
    fs = frozenset(int(e) for e in elements)
    if closure(m, fs) != fs:
        raise ValueError(f"{sorted(fs)} is not a flat")
    if len(fs) <= 1:
        return True
    fmask = _mask(fs)
    parent = {e: e for e in fs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    touched = set()
    for c, cmask in zip(m.circuits, m.circuit_masks()):
        if cmask & fmask == cmask:
            members = sorted(c)
            touched.update(members)
            root = find(members[0])
            for e in members[1:]:
                parent[find(e)] = root
    if touched != fs:
        return False
    roots = {find(e) for e in fs}
    return len(roots) == 1


def maximal_proper_flats(m: Matroid) -> list:
    """All maximal proper flats, as Flat records in deterministic order.

    Complete-graph matroids use the two-block vertex partition structure
    (2^(p-1) - 1 flats); other matroids fall back to closures of independent
    sets of corank one, guarded against combinatorial blowup.
    """
    if m.graphic_vertices is not None:
        flats = _graphic_flats(m)
    else:
        flats = _search_flats(m)
    result = [Flat(f, is_connected_flat(m, f)) for f in flats]
    result.sort(key=lambda fl: tuple(sorted(fl.elements)))
    return result


def _graphic_flats(m: Matroid):
    p = m.graphic_vertices
    index = edge_index_map(p)
    flats = []
    others = list(range(1, p))
    for r in range(p - 1):
        for rest in itertools.combinations(others, r):
            block = {0, *rest}
            if len(block) == p:
                continue
            edges = [
                k
                for (i, j), k in index.items()
                if (i in block) == (j in block)
            ]
            flats.append(frozenset(edges))
    return flats


def _search_flats(m: Matroid):
    q = m.ground_size
    if q > 28:
        raise CapacityExceeded(f"exhaustive flat search is guarded at q <= 28, got {q}")
    r = rank(m, range(q))
    if comb(q, r - 1) > _FLAT_SEARCH_LIMIT:
        raise CapacityExceeded("too many candidate independent sets for flat search")
    masks = m.circuit_masks()
    flats = set()
    for combo in itertools.combinations(range(q), r - 1):
        cm = _mask(combo)
        if any(c & cm == c for c in masks):
            continue
        flats.add(closure(m, combo))
    return flats


def matroid_to_text(m: Matroid) -> str:
    """Serialize as 'q=<n>' plus one line per circuit (1-based, sorted)."""
    lines = [f"q={m.ground_size}"]
    for c in m.circuits:
        lines.append(" ".join(str(e + 1) for e in sorted(c)))
    return "\n".join(lines) + "\n"


def matroid_from_text(text: str, verify: bool | None = None) -> Matroid:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("q="):
        raise ValueError("first line must be 'q=<ground size>'")
    q = int(lines[0][2:])
    circuits = []
    for ln in lines[1:]:
        circuits.append(frozenset(int(tok) - 1 for tok in ln.split()))
    return Matroid(q, tuple(circuits), verify=verify)
