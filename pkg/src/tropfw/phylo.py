"""Rooted phylogenetic trees: Newick I/O, cophenetic vectors, ultrametric
checks, equidistant-tree reconstruction, linkage, and Robinson-Foulds.

Trees are rooted with nonnegative branch lengths; every internal vertex has
at least two children.  Dissimilarity vectors flatten the strict upper
triangle of the distance matrix in lexicographic label-pair order.
"""

from __future__ import annotations

import csv
import itertools
import re
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NewickError
from .projection import project_ultrametric_fast


@dataclass(frozen=True)
class TreeNode:
    label: str | None
    length: float
    children: tuple

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True, eq=False)
class PhyloTree:
    root: TreeNode

    def __post_init__(self):
        labels = []

        def walk(node, is_root):
            if node.length < 0:
                raise ValueError("branch lengths must be nonnegative")
            if node.is_leaf:
                if not node.label:
                    raise ValueError("every leaf needs a label")
                labels.append(node.label)
            else:
                if len(node.children) < 2:
                    raise ValueError("internal vertices need at least two children")
                for child in node.children:
                    walk(child, False)

        walk(self.root, True)
        if len(set(labels)) != len(labels):
            raise ValueError("leaf labels must be unique")
        if len(labels) < 2:
            raise ValueError("need at least two leaves")
        object.__setattr__(self, "_leaves", tuple(sorted(labels)))

    @property
    def leaf_labels(self) -> tuple:
        return self._leaves

    def __str__(self) -> str:
        return write_newick(self)


@dataclass(frozen=True, eq=False)
class DissimilarityVector:
    """Pairwise dissimilarities on sorted labels, flattened in (i,j) lex order."""

    labels: tuple
    entries: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if list(labels) != sorted(set(labels)):
            raise ValueError("labels must be sorted and unique")
        p = len(labels)
        if p < 2:
            raise ValueError("need at least two labels")
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (comb(p, 2),):
            raise ValueError(f"expected {comb(p, 2)} entries for {p} labels, got {entries.shape}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return len(self.labels)

    def index(self, a: str, b: str) -> int:
        i, j = sorted((self.labels.index(a), self.labels.index(b)))
        if i == j:
            raise KeyError("distinct labels required")
        return pair_index(i, j, self.p)

    def get(self, a: str, b: str) -> float:
        return float(self.entries[self.index(a, b)])

    def as_matrix(self) -> np.ndarray:
        p = self.p
        m = np.zeros((p, p))
        for (i, j), value in zip(itertools.combinations(range(p), 2), self.entries):
            m[i, j] = m[j, i] = value
        return m


def pair_index(i: int, j: int, p: int) -> int:
    if not 0 <= i < j < p:
        raise ValueError("need 0 <= i < j < p")
    return i * (2 * p - i - 1) // 2 + (j - i - 1)


_LABEL_RE = re.compile(r"[^\s(),:;]+")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def parse_newick(text: str) -> PhyloTree:
    """Parse a single Newick tree; malformed input raises NewickError with offset."""
    pos = 0
    n = len(text)
    seen_labels: dict[str, int] = {}

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def parse_length(required: bool) -> float:
        nonlocal pos
        skip_ws()
        if pos < n and text[pos] == ":":
            pos += 1
            skip_ws()
            match = _NUMBER_RE.match(text, pos)
            if not match:
                raise NewickError("expected a branch length after ':'", pos)
            value = float(match.group())
            if value < 0:
                raise NewickError("negative branch length", pos)
            pos = match.end()
            return value
        if required:
            raise NewickError("missing branch length", pos)
        return 0.0

    def parse_node(is_root: bool) -> TreeNode:
        nonlocal pos
        skip_ws()
        if pos >= n:
            raise NewickError("unexpected end of input", pos)
        if text[pos] == "(":
            open_pos = pos
            pos += 1
            children = [parse_node(False)]
            skip_ws()
            while pos < n and text[pos] == ",":
                pos += 1
                children.append(parse_node(False))
                skip_ws()
            if pos >= n or text[pos] != ")":
                raise NewickError("unbalanced parentheses", open_pos)
            pos += 1
            skip_ws()
            match = _LABEL_RE.match(text, pos)
            if match:  # internal labels are accepted and ignored
                pos = match.end()
            if len(children) < 2:
                raise NewickError("internal node with a single child", open_pos)
            length = parse_length(required=not is_root)
            return TreeNode(label=None, length=length, children=tuple(children))
        match = _LABEL_RE.match(text, pos)
        if not match:
            raise NewickError(f"expected a leaf label, found {text[pos]!r}", pos)
        label = match.group()
        if label in seen_labels:
            raise NewickError(f"duplicate leaf label {label!r}", pos)
        seen_labels[label] = pos
        pos = match.end()
        length = parse_length(required=not is_root)
        return TreeNode(label=label, length=length, children=())

    root = parse_node(is_root=True)
    skip_ws()
    if pos >= n or text[pos] != ";":
        raise NewickError("expected ';' after the tree", pos)
    pos += 1
    skip_ws()
    if pos != n:
        raise NewickError("trailing content after ';'", pos)
    try:
        return PhyloTree(root)
    except ValueError as exc:
        raise NewickError(str(exc), 0) from exc


def format_branch_length(value: float) -> str:
    value = float(value)
    if value == int(value):
        return str(int(value))
    return repr(value)


def _min_leaf(node: TreeNode) -> str:
    if node.is_leaf:
        return node.label
    return min(_min_leaf(c) for c in node.children)


def write_newick(tree: PhyloTree) -> str:
    """Serialize with children ordered by smallest leaf label in each subtree."""

    def render(node: TreeNode, is_root: bool) -> str:
        if node.is_leaf:
            body = node.label
        else:
            parts = sorted(node.children, key=_min_leaf)
            body = "(" + ",".join(render(c, False) for c in parts) + ")"
        if is_root:
            return body
        return f"{body}:{format_branch_length(node.length)}"

    return render(tree.root, True) + ";"


def read_newick_file(path) -> list:
    trees = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                trees.append(parse_newick(line))
    return trees


def cophenetic_vector(tree: PhyloTree) -> DissimilarityVector:
    """Path lengths between all leaf pairs, in lexicographic label order."""
    paths = {}

    def walk(node, trail):
        trail = trail + [node]
        if node.is_leaf:
            paths[node.label] = trail
        for child in node.children:
            walk(child, trail)

    walk(tree.root, [])
    labels = tree.leaf_labels

    def cumulative(trail):
        out = [0.0]
        for node in trail[1:]:
            out.append(out[-1] + node.length)
        return out

    entries = []
    for a, b in itertools.combinations(labels, 2):
        ta, tb = paths[a], paths[b]
        da, db = cumulative(ta), cumulative(tb)
        k = 0
        while k + 1 < len(ta) and k + 1 < len(tb) and ta[k + 1] is tb[k + 1]:
            k += 1
        entries.append((da[-1] - da[k]) + (db[-1] - db[k]))
    return DissimilarityVector(labels, np.array(entries))


def leaf_depths(tree: PhyloTree) -> dict:
    depths = {}

    def walk(node, acc):
        if node.is_leaf:
            depths[node.label] = acc
        for child in node.children:
            walk(child, acc + child.length)

    walk(tree.root, 0.0)
    return depths


def is_ultrametric(d: DissimilarityVector, tol: float = 1e-9) -> bool:
    """Three-point condition: the max over every triple is attained twice within tol."""
    m = d.as_matrix()
    for i, j, k in itertools.combinations(range(d.p), 3):
        values = sorted((m[i, j], m[i, k], m[j, k]), reverse=True)
        if values[0] - values[1] > tol:
            return False
    return True


def is_tree_metric(d: DissimilarityVector, tol: float = 1e-9) -> bool:
    """Four-point condition on every quadruple, within tol."""
    m = d.as_matrix()
    for i, j, k, l in itertools.combinations(range(d.p), 4):
        sums = sorted(
            (m[i, j] + m[k, l], m[i, k] + m[j, l], m[i, l] + m[j, k]), reverse=True
        )
        if sums[0] - sums[1] > tol:
            return False
    return True


def single_linkage(d: DissimilarityVector) -> DissimilarityVector:
    """Subdominant ultrametric below d: minimax path weights on the complete graph."""
    return DissimilarityVector(d.labels, project_ultrametric_fast(d.p, d.entries))


def average_linkage(d: DissimilarityVector) -> DissimilarityVector:
    """UPGMA comparator: average-linkage merge heights, NOT the tropical projection.

    Shipped for comparison only; the pipeline's projection is single_linkage.
    """
    clusters = {i: (frozenset([i]), 0.0) for i in range(d.p)}
    dist = {frozenset((i, j)): d.entries[pair_index(i, j, d.p)] for i, j in itertools.combinations(range(d.p), 2)}
    out = np.zeros_like(d.entries)
    while len(clusters) > 1:
        keys = sorted(clusters)
        best = min(
            ((dist[frozenset((a, b))], (a, b)) for a, b in itertools.combinations(keys, 2)),
            key=lambda t: (t[0], t[1]),
        )
        value, (a, b) = best
        members_a, _ = clusters[a]
        members_b, _ = clusters[b]
        for i in sorted(members_a):
            for j in sorted(members_b):
                out[pair_index(min(i, j), max(i, j), d.p)] = value
        merged = members_a | members_b
        new_key = min(a, b)
        other_key = max(a, b)
        for k in keys:
            if k in (a, b):
                continue
            da = dist.pop(frozenset((a, k)))
            db = dist.pop(frozenset((b, k)))
            weight = (
                da * len(members_a) + db * len(members_b)
            ) / len(merged)
            dist[frozenset((new_key, k))] = weight
        dist.pop(frozenset((a, b)), None)
        clusters[new_key] = (merged, value)
        del clusters[other_key]
    return DissimilarityVector(d.labels, out)


def tree_from_ultrametric(d: DissimilarityVector, tol: float = 1e-9) -> PhyloTree:
    """Equidistant tree whose cophenetic vector reproduces an ultrametric.

    Merge heights are half the dissimilarity values; merges at equal values
    collapse into multifurcations.  Requires nonnegative ultrametric input.
    """
    if np.any(d.entries < 0):
        raise ValueError("ultrametric entries must be nonnegative to build a tree")
    if not is_ultrametric(d, tol=tol):
        raise ValueError("input does not satisfy the three-point condition")
    labels = d.labels
    p = d.p
    nodes = {i: TreeNode(label=labels[i], length=0.0, children=()) for i in range(p)}
    heights = {i: 0.0 for i in range(p)}
    parent = list(range(p))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pairs = sorted(
        ((d.entries[pair_index(i, j, p)], i, j) for i, j in itertools.combinations(range(p), 2)),
        key=lambda t: (t[0], labels[t[1]], labels[t[2]]),
    )
    idx = 0
    while idx < len(pairs):
        value = pairs[idx][0]
        group = []
        while idx < len(pairs) and pairs[idx][0] - value <= tol:
            group.append(pairs[idx])
            idx += 1
        adjacency: dict[int, set] = {}
        for _, i, j in group:
            ri, rj = find(i), find(j)
            if ri != rj:
                adjacency.setdefault(ri, set()).add(rj)
                adjacency.setdefault(rj, set()).add(ri)
        seen = set()
        height = value / 2.0
        for start in sorted(adjacency, key=lambda r: _min_leaf(nodes[r])):
            if start in seen:
                continue
            component = []
            stack = [start]
            seen.add(start)
            while stack:
                cur = stack.pop()
                component.append(cur)
                for nxt in adjacency.get(cur, ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            if len(component) < 2:
                continue
            children = sorted(component, key=lambda r: _min_leaf(nodes[r]))
            child_nodes = tuple(
                TreeNode(
                    label=nodes[r].label,
                    length=height - heights[r],
                    children=nodes[r].children,
                )
                for r in children
            )
            new = TreeNode(label=None, length=0.0, children=child_nodes)
            anchor = children[0]
            for r in children[1:]:
                parent[find(r)] = find(anchor)
            root = find(anchor)
            nodes[root] = new
            heights[root] = height
    roots = {find(i) for i in range(p)}
    if len(roots) != 1:
        raise ValueError("merging did not terminate in a single tree; input was not ultrametric")
    return PhyloTree(nodes[roots.pop()])


def clade_set(tree: PhyloTree) -> frozenset:
    """Leaf-label sets below every non-root internal vertex."""
    clades = []

    def walk(node, is_root) -> frozenset:
        if node.is_leaf:
            return frozenset([node.label])
        below = frozenset().union(*(walk(c, False) for c in node.children))
        if not is_root:
            clades.append(below)
        return below

    walk(tree.root, True)
    return frozenset(clades)


def topology_signature(tree: PhyloTree) -> frozenset:
    """Canonical topology identifier: equal signatures iff same leaf-labeled topology."""
    return clade_set(tree)


def rf_distance(t1: PhyloTree, t2: PhyloTree) -> int:
    """Rooted Robinson-Foulds distance: symmetric difference of clade sets.

    Rooted (clade) convention; unrooted split-based RF differs by a constant
    convention and is not what this returns.
    """
    if t1.leaf_labels != t2.leaf_labels:
        raise ValueError("trees must share the same leaf set")
    return len(clade_set(t1) ^ clade_set(t2))


def min_internal_branch(tree: PhyloTree) -> float:
    """Smallest internal branch length (edges between two internal vertices)."""
    best = None

    def walk(node):
        nonlocal best
        for child in node.children:
            if not child.is_leaf:
                if best is None or child.length < best:
                    best = child.length
            walk(child)

    walk(tree.root)
    if best is None:
        raise ValueError("tree has no internal edges")
    return best


def write_vectors_csv(path, vectors) -> None:
    """CSV with an 'i|j' pair-label header and one dissimilarity vector per row."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("nothing to write")
    labels = vectors[0].labels
    for v in vectors:
        if v.labels != labels:
            raise ValueError("vectors have inconsistent label sets")
    header = [f"{a}|{b}" for a, b in itertools.combinations(labels, 2)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for v in vectors:
            writer.writerow([repr(float(x)) for x in v.entries])


def read_vectors_csv(path) -> list:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise ValueError("empty vectors file")
        pairs = [tuple(col.split("|")) for col in header]
        labels = tuple(sorted({x for pair in pairs for x in pair}))
        expected = [f"{a}|{b}" for a, b in itertools.combinations(labels, 2)]
        if header != expected:
            raise ValueError("header is not in lexicographic pair order")
        out = []
        for row in reader:
            if not row:
                continue
            out.append(DissimilarityVector(labels, np.array([float(x) for x in row])))
    return out
