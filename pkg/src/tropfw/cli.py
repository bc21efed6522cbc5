"""Command-line entry point.

Subcommands: fw, project, simulate, experiment, safety-demo, hausdorff,
moments.  Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags,
unreadable or malformed inputs).  All randomness derives from --seed.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from math import comb, isqrt

import numpy as np

from .errors import TropfwError
from .experiments import (
    ExperimentConfig,
    atomic_write,
    estimate_norm_moments,
    hausdorff_experiment,
    records_to_csv,
    run_experiment,
    safety_radius_demo,
    shifts_to_csv,
    substream,
    summary_to_csv,
)
from .coalescent import SpeciesModel, simulate_gene_tree
from .fw import fw_point
from .matroid import matroid_from_text
from .phylo import (
    DissimilarityVector,
    cophenetic_vector,
    read_newick_file,
    tree_from_ultrametric,
    write_newick,
    write_vectors_csv,
)
from .projection import project_bergman, project_ultrametric_fast
from .tropical import canonicalize

METRIC_FLAGS = {"sym": "sym", "min": "min_plus", "max": "max_plus"}


class UsageError(Exception):
    """Input problem the user can fix; maps to exit code 2."""


def _fmt(x) -> str:
    value = float(x)
    if value == 0:
        return "0"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _read_matrix(path) -> list:
    try:
        with open(path, "r", newline="", encoding="utf-8") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise UsageError(f"{path} contains no data rows")
    out = []
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise UsageError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        try:
            out.append(np.array([float(tok) for tok in row]))
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from exc
    if width < 2:
        raise UsageError("vectors need at least two coordinates")
    return out


def _parse_vector(text) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad vector {text!r}: {exc}") from exc


def _leaf_count(q: int) -> int:
    p = (1 + isqrt(1 + 8 * q)) // 2
    if comb(p, 2) != q:
        raise UsageError(f"vector length {q} is not a binomial coefficient p choose 2")
    return p


def _generic_labels(p: int) -> tuple:
    return tuple(f"L{i:02d}" for i in range(1, p + 1))


def _ultrametric_tree_line(point: np.ndarray) -> str:
    p = _leaf_count(len(point))
    entries = np.asarray(point, dtype=float)
    if entries.min() < 0:
        entries = entries - entries.min()
    tree = tree_from_ultrametric(DissimilarityVector(_generic_labels(p), entries))
    return write_newick(tree)


def cmd_fw(args) -> int:
    sample = _read_matrix(args.input)
    solution = fw_point(sample, metric=METRIC_FLAGS[args.metric])
    point = canonicalize(solution.point)
    print("point," + ",".join(_fmt(c) for c in point.coords))
    print("objective," + repr(float(solution.objective)))
    if args.project is not None:
        p = args.project
        if comb(p, 2) != len(point.coords):
            raise UsageError(
                f"--project {p} needs vectors of length {comb(p, 2)}, got {len(point.coords)}"
            )
        projected = project_ultrametric_fast(p, np.asarray(solution.point.coords, dtype=float))
        print("projection," + ",".join(_fmt(c) for c in projected))
        print("newick," + _ultrametric_tree_line(projected))
    return 0


def _load_matroid(args):
    if (args.graphic is None) == (args.matroid is None):
        raise UsageError("specify exactly one of --graphic or --matroid")
    if args.graphic is not None:
        from .matroid import graphic_matroid

        if args.graphic < 3:
            raise UsageError("--graphic needs p >= 3")
        return graphic_matroid(args.graphic)
    try:
        text = open(args.matroid, "r", encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.matroid}: {exc}") from exc
    try:
        return matroid_from_text(text)
    except ValueError as exc:
        raise UsageError(f"bad matroid file {args.matroid}: {exc}") from exc


def cmd_project(args) -> int:
    m = _load_matroid(args)
    if (args.vector is None) == (args.input is None):
        raise UsageError("specify exactly one of --vector or --input")
    if args.vector is not None:
        v = _parse_vector(args.vector)
        if len(v) != m.ground_size:
            raise UsageError(f"vector length {len(v)} != ground size {m.ground_size}")
        projected = project_bergman(m, v)
        print(",".join(_fmt(c) for c in projected))
        return 0
    rows = _read_matrix(args.input)
    projected_rows = []
    for v in rows:
        if len(v) != m.ground_size:
            raise UsageError(f"vector length {len(v)} != ground size {m.ground_size}")
        projected_rows.append(project_bergman(m, v))
    if args.output:
        def body(handle):
            writer = csv.writer(handle)
            for row in projected_rows:
                writer.writerow([repr(float(c)) for c in row])

        atomic_write(args.output, body)
    else:
        for row in projected_rows:
            print(",".join(_fmt(c) for c in row))
    return 0


def cmd_simulate(args) -> int:
    try:
        trees = read_newick_file(args.species)
    except OSError as exc:
        raise UsageError(f"cannot read {args.species}: {exc}") from exc
    except TropfwError as exc:
        raise UsageError(f"bad species tree: {exc}") from exc
    if len(trees) != 1:
        raise UsageError(f"{args.species} must contain exactly one tree")
    if args.ne <= 0:
        raise UsageError("--ne must be positive")
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    model = SpeciesModel(trees[0], args.ne)
    rng = substream(args.seed, "simulate", args.ne)
    genes = [simulate_gene_tree(model, rng) for _ in range(args.count)]

    def body(handle):
        for tree in genes:
            handle.write(write_newick(tree) + "\n")

    atomic_write(args.output, body)
    if args.vectors:
        write_vectors_csv(args.vectors, [cophenetic_vector(t) for t in genes])
    return 0


def _load_config(path) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_toml(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except (ValueError, TropfwError) as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc


def cmd_experiment(args) -> int:
    config = _load_config(args.config)
    records = run_experiment(config, threads=args.threads)
    records_to_csv(records, args.output)
    return 0


def cmd_safety_demo(args) -> int:
    config = _load_config(args.config)
    records, summary = safety_radius_demo(config, threads=args.threads)
    records_to_csv(records, args.output)
    if args.summary:
        summary_to_csv(summary, args.summary)
    return 0


def _parse_int_list(text, flag) -> tuple:
    try:
        values = tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated integers: {exc}") from exc
    if not values:
        raise UsageError(f"{flag} must not be empty")
    return values


def cmd_hausdorff(args) -> int:
    n_values = _parse_int_list(args.n_values, "--n-values")
    q_values = _parse_int_list(args.q_values, "--q-values")
    if min(n_values) < 2 or min(q_values) < 2:
        raise UsageError("sample sizes and dimensions must be at least 2")
    rows = hausdorff_experiment(
        n_values=n_values,
        q_values=q_values,
        replicates=args.replicates,
        master_seed=args.seed,
        threads=args.threads,
    )
    shifts_to_csv(rows, args.output)
    return 0


def cmd_moments(args) -> int:
    if args.q < 2:
        raise UsageError("--q must be at least 2")
    if args.samples < 1000:
        raise UsageError("--samples must be at least 1000")
    moments = estimate_norm_moments(args.q, args.samples, substream(args.seed, "moments", args.q))
    print(f"E,{repr(moments.e)},{repr(moments.e_se)}")
    print(f"V,{repr(moments.v)},{repr(moments.v_se)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tropfw",
        description="Tropical Fermat-Weber consensus and species-tree experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fw = sub.add_parser("fw", help="Fermat-Weber point of CSV sample vectors")
    p_fw.add_argument("--metric", choices=sorted(METRIC_FLAGS), default="sym")
    p_fw.add_argument("--input", required=True, help="CSV, one sample vector per row")
    p_fw.add_argument("--project", type=int, default=None, metavar="P",
                      help="also print the subdominant ultrametric and tree for P leaves")
    p_fw.set_defaults(func=cmd_fw)

    p_proj = sub.add_parser("project", help="project vectors onto a Bergman fan")
    p_proj.add_argument("--graphic", type=int, default=None, metavar="P",
                        help="use the cycle matroid of the complete graph on P vertices")
    p_proj.add_argument("--matroid", default=None, help="matroid circuit file")
    p_proj.add_argument("--vector", default=None, help="comma-separated coordinates")
    p_proj.add_argument("--input", default=None, help="CSV of vectors to project")
    p_proj.add_argument("--output", default=None, help="CSV output (default: stdout)")
    p_proj.set_defaults(func=cmd_project)

    p_sim = sub.add_parser("simulate", help="simulate coalescent gene trees")
    p_sim.add_argument("--species", required=True, help="species tree Newick file")
    p_sim.add_argument("--ne", type=float, required=True, help="effective population size")
    p_sim.add_argument("--count", type=int, required=True, help="number of gene trees")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--output", required=True, help="Newick output, one tree per line")
    p_sim.add_argument("--vectors", default=None, help="optional CSV of distance vectors")
    p_sim.set_defaults(func=cmd_simulate)

    p_exp = sub.add_parser("experiment", help="run the coalescent estimator grid")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--output", required=True)
    p_exp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_exp.set_defaults(func=cmd_experiment)

    p_demo = sub.add_parser("safety-demo", help="direct-noise safety radius demonstration")
    p_demo.add_argument("--config", required=True)
    p_demo.add_argument("--output", required=True)
    p_demo.add_argument("--summary", default=None, help="optional per-cell summary CSV")
    p_demo.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_demo.set_defaults(func=cmd_safety_demo)

    p_haus = sub.add_parser("hausdorff", help="scaled Fermat-Weber shift histogram data")
    p_haus.add_argument("--output", required=True)
    p_haus.add_argument("--n-values", default="2,3,4,5,6,7")
    p_haus.add_argument("--q-values", default="2,3,4,5,6")
    p_haus.add_argument("--replicates", type=int, default=2000)
    p_haus.add_argument("--seed", type=int, default=0)
    p_haus.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_haus.set_defaults(func=cmd_hausdorff)

    p_mom = sub.add_parser("moments", help="Monte-Carlo moments of the tropical norm")
    p_mom.add_argument("--q", type=int, required=True)
    p_mom.add_argument("--samples", type=int, required=True)
    p_mom.add_argument("--seed", type=int, default=0)
    p_mom.set_defaults(func=cmd_moments)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
