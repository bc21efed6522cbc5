"""Distance-based species-tree estimators: GLASS, STEAC, and Fermat-Weber.

Each estimator reduces a set of gene-tree distance vectors to one vector
(minimum, mean, or a Fermat-Weber point), projects it to the subdominant
ultrametric, translates into the nonnegative orthant when noise pushed
entries below zero (pendant edges only; topology is unaffected), and builds
the equidistant tree.
"""

from __future__ import annotations

import numpy as np

from .fw import fw_point
from .phylo import DissimilarityVector, PhyloTree, single_linkage, tree_from_ultrametric
from .projection import project_ultrametric_fast

FW_METRICS = {"sym": "sym", "min": "min_plus", "max": "max_plus"}


def _common_labels(vectors) -> tuple:
    vectors = list(vectors)
    if not vectors:
        raise ValueError("need at least one gene-tree vector")
    labels = vectors[0].labels
    for v in vectors[1:]:
        if v.labels != labels:
            raise ValueError("gene-tree vectors have different label sets")
    return labels, vectors


def _tree_from_projected(labels, entries: np.ndarray) -> PhyloTree:
    lowest = entries.min()
    if lowest < 0:
        entries = entries - lowest
    return tree_from_ultrametric(DissimilarityVector(labels, entries))


def glass_estimate(vectors) -> PhyloTree:
    """Coordinatewise minimum of the gene vectors, then subdominant ultrametric."""
    labels, vs = _common_labels(vectors)
    merged = np.minimum.reduce([v.entries for v in vs])
    projected = single_linkage(DissimilarityVector(labels, merged))
    return _tree_from_projected(labels, projected.entries)


def steac_estimate(vectors) -> PhyloTree:
    """Coordinatewise mean of the gene vectors, then subdominant ultrametric."""
    labels, vs = _common_labels(vectors)
    merged = np.mean([v.entries for v in vs], axis=0)
    projected = single_linkage(DissimilarityVector(labels, merged))
    return _tree_from_projected(labels, projected.entries)


def fw_estimate(vectors, metric: str = "sym") -> PhyloTree:
    """Fermat-Weber point of the gene vectors under the chosen tropical distance,
    projected to the subdominant ultrametric."""
    labels, vs = _common_labels(vectors)
    metric = FW_METRICS.get(metric, metric)
    solution = fw_point([v.entries for v in vs], metric=metric)
    point = np.asarray(solution.point.coords, dtype=float)
    projected = project_ultrametric_fast(len(labels), point)
    return _tree_from_projected(labels, projected)
