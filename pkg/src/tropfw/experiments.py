"""Experiment runners: coalescent grids, the direct-noise safety-radius demo,
Fermat-Weber shift histograms, and tropical-norm moment estimation.

All randomness flows from one master seed through named Philox substreams,
so results are independent of worker count and scheduling.  Records are
sorted by (Ne, sigma, n, trial, method) before output.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .coalescent import NoiseSpec, SpeciesModel, perturb, simulate_gene_tree
from .estimators import fw_estimate, glass_estimate, steac_estimate
from .fw import hausdorff_shift
from .phylo import (
    cophenetic_vector,
    min_internal_branch,
    parse_newick,
    rf_distance,
    topology_signature,
)
from .tropical import d_tr

METHODS = ("sym_fw", "min_fw", "max_fw", "glass", "steac")

RECORD_HEADER = ("method", "Ne", "sigma", "n", "trial", "rf", "tr_dist", "topology_match", "seed")


def substream(master_seed: int, *context) -> np.random.Generator:
    """Philox generator keyed by a hash of the master seed and a context path.

    The key is the 128-bit blake2b digest of ``master_seed|ctx1|ctx2|...``;
    counter-based streams keyed this way are independent of evaluation order.
    """
    return np.random.Generator(np.random.Philox(key=_stream_key(master_seed, *context)))


def _stream_key(master_seed: int, *context) -> int:
    token = "|".join([str(int(master_seed))] + [str(c) for c in context])
    return int.from_bytes(hashlib.blake2b(token.encode(), digest_size=16).digest(), "little")


def stream_seed(master_seed: int, *context) -> int:
    """64-bit identifier of a substream, recorded alongside each trial."""
    return _stream_key(master_seed, *context) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    ne: float
    sigma: float
    n: int
    trial: int
    rf: int
    tr_dist: float
    topology_match: bool
    seed: int

    def __post_init__(self):
        if (self.rf == 0) != self.topology_match:
            raise ValueError("rf == 0 must coincide with a topology match")


_CONFIG_KEYS = {
    "species_tree": str,
    "master_seed": int,
    "pool_size": int,
    "trials": int,
    "methods": list,
    "sigma_values": list,
    "n_values": list,
    "ne_values": list,
}


@dataclass(frozen=True)
class ExperimentConfig:
    species_newick: str
    master_seed: int
    pool_size: int
    trials: int
    methods: tuple
    sigma_values: tuple
    n_values: tuple
    ne_values: tuple = ()

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
        for key, value in raw.items():
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key '{key}'")
            if not isinstance(value, _CONFIG_KEYS[key]) and not (
                _CONFIG_KEYS[key] is int and isinstance(value, int)
            ):
                raise ValueError(f"config key '{key}': expected {_CONFIG_KEYS[key].__name__}")
        missing = {"species_tree", "master_seed", "pool_size", "trials", "n_values"} - set(raw)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        tree_path = Path(raw["species_tree"])
        if not tree_path.is_absolute():
            tree_path = path.parent / tree_path
        newick = tree_path.read_text(encoding="utf-8").strip()
        parse_newick(newick)
        methods = tuple(raw.get("methods", list(METHODS)))
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"config key 'methods': unknown method '{m}'")
        return cls(
            species_newick=newick,
            master_seed=int(raw["master_seed"]),
            pool_size=int(raw["pool_size"]),
            trials=int(raw["trials"]),
            methods=methods,
            sigma_values=tuple(float(s) for s in raw.get("sigma_values", [0.0])),
            n_values=tuple(int(n) for n in raw["n_values"]),
            ne_values=tuple(float(v) for v in raw.get("ne_values", [])),
        )


_ESTIMATORS = {
    "sym_fw": lambda vs: fw_estimate(vs, "sym"),
    "min_fw": lambda vs: fw_estimate(vs, "min_plus"),
    "max_fw": lambda vs: fw_estimate(vs, "max_plus"),
    "glass": glass_estimate,
    "steac": steac_estimate,
}


def _score_methods(config, species, truth_vector, truth_topology, pool, ne, sigma, topo_log=None):
    records = []
    for n in config.n_values:
        if n > len(pool):
            raise ValueError(f"sample size {n} exceeds pool size {len(pool)}")
        for trial in range(config.trials):
            context = ("trial", ne, sigma, n, trial)
            rng = substream(config.master_seed, *context)
            indices = rng.choice(len(pool), size=n, replace=False)
            sample = [pool[i] for i in indices]
            for method in config.methods:
                estimate = _ESTIMATORS[method](sample)
                rf = rf_distance(species, estimate)
                tr = float(d_tr(truth_vector, cophenetic_vector(estimate).entries))
                signature = topology_signature(estimate)
                if topo_log is not None:
                    topo_log.setdefault((sigma, n, method), set()).add(signature)
                records.append(
                    ExperimentRecord(
                        method=method,
                        ne=float(ne),
                        sigma=float(sigma),
                        n=int(n),
                        trial=int(trial),
                        rf=int(rf),
                        tr_dist=tr,
                        topology_match=bool(signature == truth_topology),
                        seed=stream_seed(config.master_seed, *context),
                    )
                )
    return records


def _experiment_cell(config: ExperimentConfig, ne: float, sigma: float):
    species = parse_newick(config.species_newick)
    model = SpeciesModel(species, ne)
    truth_vector = cophenetic_vector(species).entries
    truth_topology = topology_signature(species)
    w_ref = min_internal_branch(species)
    pool_rng = substream(config.master_seed, "pool", ne)
    vectors = [
        cophenetic_vector(simulate_gene_tree(model, pool_rng))
        for _ in range(config.pool_size)
    ]
    noise_rng = substream(config.master_seed, "noise", ne, sigma)
    spec = NoiseSpec(sigma, w_ref)
    pool = [perturb(v, spec, noise_rng) for v in vectors]
    return _score_methods(config, species, truth_vector, truth_topology, pool, ne, sigma)


def _demo_cell(config: ExperimentConfig, sigma: float):
    species = parse_newick(config.species_newick)
    truth = cophenetic_vector(species)
    truth_topology = topology_signature(species)
    w_ref = min_internal_branch(species)
    noise_rng = substream(config.master_seed, "demo-noise", sigma)
    spec = NoiseSpec(sigma, w_ref)
    pool = [perturb(truth, spec, noise_rng) for _ in range(config.pool_size)]
    topo_log: dict = {}
    records = _score_methods(
        config, species, truth.entries, truth_topology, pool, 0.0, sigma, topo_log=topo_log
    )
    return records, topo_log


def _sort_records(records):
    return sorted(records, key=lambda r: (r.ne, r.sigma, r.n, r.trial, r.method))


def run_experiment(config: ExperimentConfig, threads: int = 1):
    """Coalescent pipeline: per Ne simulate a gene-tree pool, perturb per sigma,
    then score every (n, trial, method) combination."""
    if not config.ne_values:
        raise ValueError("run_experiment needs ne_values in the config")
    for n in config.n_values:
        if n > config.pool_size:
            raise ValueError(f"sample size {n} exceeds pool size {config.pool_size}")
    cells = [(ne, sigma) for ne in config.ne_values for sigma in config.sigma_values]
    records = []
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(
                _experiment_cell_star, [(config, ne, sigma) for ne, sigma in cells]
            ):
                records.extend(chunk)
    else:
        for ne, sigma in cells:
            records.extend(_experiment_cell(config, ne, sigma))
    return _sort_records(records)


def _experiment_cell_star(args):
    return _experiment_cell(*args)


def safety_radius_demo(config: ExperimentConfig, threads: int = 1):
    """Direct-noise demonstration: the pool is perturbed copies of the species
    tree's own distance vector.  Returns (records, summary rows) where summary
    rows are (sigma, n, method, distinct topology count, correct fraction)."""
    for n in config.n_values:
        if n > config.pool_size:
            raise ValueError(f"sample size {n} exceeds pool size {config.pool_size}")
    records = []
    topo_log: dict = {}
    if threads > 1 and len(config.sigma_values) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk, log in pool.map(
                _demo_cell_star, [(config, sigma) for sigma in config.sigma_values]
            ):
                records.extend(chunk)
                topo_log.update(log)
    else:
        for sigma in config.sigma_values:
            chunk, log = _demo_cell(config, sigma)
            records.extend(chunk)
            topo_log.update(log)
    records = _sort_records(records)

    correct: dict = {}
    totals: dict = {}
    for r in records:
        key = (r.sigma, r.n, r.method)
        totals[key] = totals.get(key, 0) + 1
        correct[key] = correct.get(key, 0) + (1 if r.topology_match else 0)
    summary = []
    for sigma in config.sigma_values:
        for n in config.n_values:
            for method in config.methods:
                key = (float(sigma), int(n), method)
                summary.append(
                    (
                        key[0],
                        key[1],
                        method,
                        len(topo_log.get((sigma, n, method), set())),
                        correct.get(key, 0) / totals.get(key, 1),
                    )
                )
    return records, summary


def _demo_cell_star(args):
    return _demo_cell(*args)


def hausdorff_experiment(
    n_values=(2, 3, 4, 5, 6, 7),
    q_values=(2, 3, 4, 5, 6),
    replicates: int = 2000,
    master_seed: int = 0,
    threads: int = 1,
):
    """Scaled Fermat-Weber shift under small perturbations.

    Samples are uniform on [0,1]^q, perturbations uniform on [0, 0.01]^q;
    yields (n, q, replicate, shift) rows.
    """
    cells = [(n, q) for n in n_values for q in q_values]
    if threads > 1 and len(cells) > 1:
        rows = []
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(
                _hausdorff_cell_star,
                [(n, q, replicates, master_seed) for n, q in cells],
            ):
                rows.extend(chunk)
        return rows
    rows = []
    for n, q in cells:
        rows.extend(_hausdorff_cell(n, q, replicates, master_seed))
    return rows


def _hausdorff_cell(n, q, replicates, master_seed):
    rng = substream(master_seed, "hausdorff", n, q)
    rows = []
    for rep in range(replicates):
        sample = rng.uniform(0.0, 1.0, size=(n, q))
        eps = rng.uniform(0.0, 0.01, size=(n, q))
        rows.append((n, q, rep, float(hausdorff_shift(list(sample), list(eps)))))
    return rows


def _hausdorff_cell_star(args):
    return _hausdorff_cell(*args)


@dataclass(frozen=True)
class NormMoments:
    """Monte-Carlo estimates of E||Z||_tr and Var||Z||_tr for standard normal Z."""

    q: int
    samples: int
    e: float
    e_se: float
    v: float
    v_se: float


def estimate_norm_moments(q: int, n_samples: int, rng: np.random.Generator) -> NormMoments:
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples for stable moments")
    norms = np.empty(n_samples)
    block = max(1, min(n_samples, 10_000_000 // q))
    done = 0
    while done < n_samples:
        take = min(block, n_samples - done)
        z = rng.standard_normal((take, q))
        norms[done : done + take] = z.max(axis=1) - z.min(axis=1)
        done += take
    e = float(norms.mean())
    v = float(norms.var(ddof=1))
    e_se = float(norms.std(ddof=1) / math.sqrt(n_samples))
    centered = norms - e
    m4 = float(np.mean(centered**4))
    v_se = float(math.sqrt(max(m4 - v**2, 0.0) / n_samples))
    return NormMoments(q=q, samples=n_samples, e=e, e_se=e_se, v=v, v_se=v_se)


def stochastic_safety_sigma(eta: float, n: int, q: int, w_min_tilde: float, moments: NormMoments) -> float:
    """Admissible noise level sigma <= w_min / (2 (n E(q) + sqrt(n V(q) / eta)))."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if n < 1 or q < 2 or w_min_tilde <= 0:
        raise ValueError("n, q, and w_min must be positive")
    return w_min_tilde / (2.0 * (n * moments.e + math.sqrt(n * moments.v / eta)))


def atomic_write(path, write_body):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            write_body(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def records_to_csv(records, path) -> None:
    """Atomic CSV dump; booleans as true/false, floats via repr."""

    def body(handle):
        writer = csv.writer(handle)
        writer.writerow(RECORD_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.method,
                    repr(float(r.ne)),
                    repr(float(r.sigma)),
                    r.n,
                    r.trial,
                    r.rf,
                    repr(float(r.tr_dist)),
                    "true" if r.topology_match else "false",
                    r.seed,
                ]
            )

    atomic_write(path, body)


def summary_to_csv(rows, path) -> None:
    def body(handle):
        writer = csv.writer(handle)
        writer.writerow(["sigma", "n", "method", "distinct_topologies", "correct_fraction"])
        for sigma, n, method, distinct, fraction in rows:
            writer.writerow([repr(float(sigma)), n, method, distinct, repr(float(fraction))])

    atomic_write(path, body)


def shifts_to_csv(rows, path) -> None:
    def body(handle):
        writer = csv.writer(handle)
        writer.writerow(["n", "q", "replicate", "scaled_shift"])
        for n, q, rep, shift in rows:
            writer.writerow([n, q, rep, repr(float(shift))])

    atomic_write(path, body)
