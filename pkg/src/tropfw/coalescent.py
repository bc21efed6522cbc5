"""Multispecies coalescent simulation inside an ultrametric species tree.

Time runs backward from the leaves in generations.  Within a species-tree
branch carrying k gene lineages, the next coalescence is exponential with
rate k(k-1)/(2 Ne); survivors join the parent population, and coalescence
above the root continues until a single lineage remains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phylo import (
    DissimilarityVector,
    PhyloTree,
    TreeNode,
    cophenetic_vector,
    is_ultrametric,
    leaf_depths,
)


@dataclass(frozen=True)
class SpeciesModel:
    """Ultrametric species tree plus a single shared effective population size."""

    species_tree: PhyloTree
    effective_population: float

    def __post_init__(self):
        if self.effective_population <= 0:
            raise ValueError("effective population size must be positive")
        if not is_ultrametric(cophenetic_vector(self.species_tree)):
            raise ValueError("species tree must be ultrametric (molecular clock)")

    @property
    def depth(self) -> float:
        return max(leaf_depths(self.species_tree).values())


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise scaled by the species tree's minimum internal branch length."""

    sigma: float
    w_min_ref: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.w_min_ref <= 0:
            raise ValueError("reference branch length must be positive")

    @property
    def std(self) -> float:
        return self.sigma * self.w_min_ref


@dataclass(frozen=True)
class _Lineage:
    height: float
    label: str | None
    children: tuple

    def finalize(self, parent_height: float) -> TreeNode:
        return TreeNode(label=self.label, length=parent_height - self.height, children=self.children)


def _coalesce(lineages, start, end, ne, rng):
    """Merge lineages between heights start and end (None = unbounded)."""
    t = start
    current = list(lineages)
    while len(current) >= 2:
        k = len(current)
        wait = rng.exponential(2.0 * ne / (k * (k - 1)))
        if end is not None and t + wait >= end:
            return current
        t += wait
        i, j = sorted(int(x) for x in rng.choice(k, size=2, replace=False))
        a = current.pop(j)
        b = current.pop(i)
        merged = _Lineage(
            height=t,
            label=None,
            children=(b.finalize(t), a.finalize(t)),
        )
        current.append(merged)
    return current


def simulate_gene_tree(model: SpeciesModel, rng: np.random.Generator) -> PhyloTree:
    """Draw one ultrametric gene tree on the species labels under the coalescent."""
    ne = model.effective_population
    total = model.depth

    def process(node: TreeNode, height: float, parent_height):
        if node.is_leaf:
            gathered = [_Lineage(height=0.0, label=node.label, children=())]
        else:
            gathered = []
            for child in node.children:
                gathered.extend(process(child, height - child.length, height))
        return _coalesce(gathered, height, parent_height, ne, rng)

    survivors = []
    root = model.species_tree.root
    for child in root.children:
        survivors.extend(process(child, total - child.length, total))
    final = _coalesce(survivors, total, None, ne, rng)
    (lineage,) = final
    return PhyloTree(TreeNode(label=None, length=0.0, children=lineage.children))


def perturb(v: DissimilarityVector, spec: NoiseSpec, rng: np.random.Generator) -> DissimilarityVector:
    """Add iid Gaussian noise per coordinate; entries may go negative."""
    noise = rng.normal(0.0, spec.std, size=v.entries.shape)
    return DissimilarityVector(v.labels, v.entries + noise)
