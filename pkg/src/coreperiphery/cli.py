"""Command-line interface: generate / detect / detect-degree / split-degree /
benchmark / oracle-check.

Every run writes a JSON manifest (resolved flags, seed, input digests, tool
version, wall clock, outcome) next to its outputs; all randomness flows from
the --seed flag (default 0), so identical invocations reproduce outputs
byte-for-byte.  Logs go to stderr, data to files or stdout.

Exit codes: 0 success, 1 user error, 2 oracle-check tolerance breach,
3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from importlib import metadata

import numpy as np

from . import bench, degree_model, em, graph, oracle, sbm
from .bp import Params, run_bp

logger = logging.getLogger("coreperiphery")

EXIT_OK = 0
EXIT_USER = 1
EXIT_TOLERANCE = 2
EXIT_INTERNAL = 3


def _version() -> str:
    try:
        return metadata.version("coreperiphery")
    except metadata.PackageNotFoundError:
        return "unknown"


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(prefix: str, subcommand: str, args: argparse.Namespace,
                    inputs: list[str], started: float, outcome: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "flags": {k: v for k, v in sorted(vars(args).items())
                  if k not in ("func",)},
        "seed": getattr(args, "seed", None),
        "input_digests": {p: _digest(p) for p in inputs},
        "version": _version(),
        "wall_clock_s": round(time.monotonic() - started, 3),
        "outcome": outcome,
    }
    with open(prefix + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def _load_graph(path: str) -> graph.LoadResult:
    with open(path, encoding="utf-8") as f:
        return graph.load_edge_list(f)


def _mixing_from_args(args: argparse.Namespace) -> sbm.MixingMatrix:
    direct = [args.c11, args.c12, args.c22]
    theta = [args.theta1, args.theta2, args.r]
    weak = [args.c, args.delta]
    if all(v is not None for v in direct):
        return sbm.MixingMatrix(args.c11, args.c12, args.c22)
    if all(v is not None for v in theta):
        return sbm.mixing_from_theta(
            sbm.ThetaParametrization(args.theta1, args.theta2, args.r))
    if all(v is not None for v in weak):
        return sbm.weak_structure_mixing(args.c, args.alpha1, args.alpha2,
                                         args.delta)
    raise ValueError(
        "specify the mixing matrix as --c11/--c12/--c22, as "
        "--theta1/--theta2/--r, or as --c/--alpha1/--alpha2/--delta")


def cmd_generate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    mixing = _mixing_from_args(args)
    net = sbm.sample_sbm(args.n, args.gamma1, mixing, args.seed)
    edge_path = args.output + ".edges"
    truth_path = args.output + ".truth.tsv"
    with open(edge_path, "w", encoding="utf-8") as f:
        graph.write_edge_list(net.graph, f)
    with open(truth_path, "w", encoding="utf-8") as f:
        for v, g in enumerate(net.truth):
            f.write(f"{v}\t{g}\n")
    outcome = {"n": net.graph.n, "m": net.graph.m,
               "c11": mixing.c11, "c12": mixing.c12, "c22": mixing.c22,
               "edge_file": edge_path, "truth_file": truth_path}
    _write_manifest(args.output, "generate", args, [], started, outcome)
    logger.info("wrote %s (%d edges) and %s", edge_path, net.graph.m, truth_path)
    return EXIT_OK


def _write_vertex_csv(path: str, labels: graph.LabelMap,
                      marginals: np.ndarray | None,
                      assignment: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("label,q_core,assignment\n")
        for i, a in enumerate(assignment):
            q = "" if marginals is None else repr(float(marginals[i, 0]))
            name = "core" if a == em.CORE else "periphery"
            f.write(f"{labels.to_external(i)},{q},{name}\n")


def cmd_detect(args: argparse.Namespace) -> int:
    started = time.monotonic()
    loaded = _load_graph(args.input)
    config = em.FitConfig(restarts=args.restarts, em_tol=args.em_tol,
                          em_max_iter=args.em_max_iter, bp_tol=args.bp_tol,
                          bp_max_iter=args.bp_max_iter, seed=args.seed,
                          init_spread=args.init_spread, damping=args.damping)
    result = em.fit(loaded.graph, config)
    _write_vertex_csv(args.output + ".vertices.csv", loaded.labels,
                      result.marginals, result.assignment)
    summary = {
        "gamma1": result.params.gamma1,
        "c11": result.params.mixing.c11,
        "c12": result.params.mixing.c12,
        "c22": result.params.mixing.c22,
        "objective": result.objective,
        "structure_class": result.structure_class,
        "iterations": result.em_iterations,
        "converged": result.converged,
        "restarts_used": result.restarts_used,
        "degenerate_restarts": result.degenerate_restarts,
    }
    with open(args.output + ".summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(args.output, "detect", args, [args.input], started, summary)
    return EXIT_OK


def cmd_detect_degree(args: argparse.Namespace) -> int:
    started = time.monotonic()
    loaded = _load_graph(args.input)
    result = degree_model.fit_degree_model(loaded.graph, tol=args.tol,
                                           max_iter=args.max_iter,
                                           seed=args.seed)
    _write_vertex_csv(args.output + ".vertices.csv", loaded.labels,
                      result.marginals, result.assignment)
    summary = {
        "gamma1": result.params.gamma1,
        "r": result.params.r,
        "theta": result.params.theta,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    with open(args.output + ".summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(args.output, "detect-degree", args, [args.input],
                    started, summary)
    return EXIT_OK


def cmd_split_degree(args: argparse.Namespace) -> int:
    started = time.monotonic()
    loaded = _load_graph(args.input)
    assignment = degree_model.naive_split(loaded.graph, args.core_fraction)
    _write_vertex_csv(args.output + ".vertices.csv", loaded.labels,
                      None, assignment)
    summary = {"core_fraction": args.core_fraction,
               "core_size": int((assignment == em.CORE).sum())}
    with open(args.output + ".summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(args.output, "split-degree", args, [args.input],
                    started, summary)
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    started = time.monotonic()
    kwargs = dict(n=args.n, trials=args.trials, seed=args.seed,
                  methods=tuple(args.methods.split(",")),
                  true_params_mode=args.true_params,
                  restarts=args.restarts, gamma1=args.gamma1)
    if args.delta_grid is not None:
        grid = tuple(float(x) for x in args.delta_grid.split(","))
        cfg = bench.SweepConfig(c=args.c, alpha1=args.alpha1,
                                alpha2=args.alpha2, delta_grid=grid, **kwargs)
    else:
        if args.theta1 is None:
            raise ValueError("benchmark needs --theta1 (with optional "
                             "--theta2-grid) or --c with --delta-grid")
        if args.theta2_grid is not None:
            grid = tuple(float(x) for x in args.theta2_grid.split(","))
        else:
            grid = bench.default_theta2_grid(args.theta1, args.r,
                                             args.grid_points)
        cfg = bench.SweepConfig(theta1=args.theta1, r=args.r,
                                theta2_grid=grid, **kwargs)
    rows = bench.run_sweep(cfg, workers=args.workers)
    csv_path = args.output + ".sweep.csv"
    with open(csv_path, "w", encoding="utf-8") as f:
        bench.write_sweep_csv(cfg, rows, f)
    if args.plot_script:
        _write_plot_script(args.output, cfg)
    outcome = {"rows": len(rows), "csv": csv_path}
    _write_manifest(args.output, "benchmark", args, [], started, outcome)
    return EXIT_OK


def _write_plot_script(prefix: str, cfg: bench.SweepConfig) -> None:
    """Emit a gnuplot script plotting mean error vs. the sweep parameter."""
    name = cfg.parameter_name
    lines = [
        "set datafile separator ','",
        f"set xlabel '{name}'",
        "set ylabel 'error rate'",
        "set key top left",
        "plot " + ", \\\n     ".join(
            f"'{prefix}.sweep.csv' using 2:(strcol(3) eq '{m}' ? column(4) : 1/0) "
            f"with linespoints title '{m}'" for m in cfg.methods),
    ]
    with open(prefix + ".plot.gp", "w") as f:
        f.write("\n".join(lines) + "\n")


def _oracle_suite_graphs() -> list[tuple[str, graph.Graph]]:
    rng = np.random.default_rng(12345)
    suite = [
        ("single_edge", graph.from_edges(2, [(0, 1)])),
        ("path_4", graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])),
        ("star_6", graph.from_edges(6, [(0, k) for k in range(1, 6)])),
    ]
    for t in range(3):
        n = 10 + t
        edges = [(int(rng.integers(i)), i) for i in range(1, n)]
        suite.append((f"random_tree_{n}", graph.from_edges(n, edges)))
    return suite


def cmd_oracle_check(args: argparse.Namespace) -> int:
    """BP-vs-exact-enumeration suite on built-in small graphs.

    Mixing entries are scaled down as if the trees sat inside an ambient
    network of --ambient-n vertices, so the sparse approximation error in BP
    is negligible and any breach of --tol flags a real defect.
    """
    started = time.monotonic()
    ambient = args.ambient_n
    worst = 0.0
    report = []
    for name, g in _oracle_suite_graphs():
        scale = g.n / ambient
        params = Params(0.5, sbm.MixingMatrix(6.0 * scale, 3.0 * scale,
                                              1.5 * scale))
        exact = oracle.exact_posterior(g, params)
        bp = run_bp(g, params, seed=args.seed, tol=1e-12, max_iter=500)
        dev = float(np.abs(bp.marginals - exact.one_point).max())
        worst = max(worst, dev)
        report.append({"graph": name, "n": g.n, "max_deviation": dev,
                       "bp_converged": bp.converged})
        print(f"{name}: n={g.n} max|bp - exact| = {dev:.3e}")
    print(f"worst deviation: {worst:.3e} (tolerance {args.tol:g})")
    status = EXIT_OK if worst <= args.tol else EXIT_TOLERANCE
    if args.output:
        _write_manifest(args.output, "oracle-check", args, [], started,
                        {"worst_deviation": worst, "report": report,
                         "passed": status == EXIT_OK})
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreperiphery",
        description="Core-periphery decomposition of sparse networks by "
                    "two-group SBM inference (EM + belief propagation).")
    parser.add_argument("--log-level",
                        default=os.environ.get("COREPERIPHERY_LOG_LEVEL", "INFO"),
                        help="logging level for stderr (default: INFO)")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="JSON file of flag defaults for the subcommand; "
                             "explicit command-line flags win")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="sample a planted SBM network")
    gen.add_argument("--n", type=int, required=True, help="vertex count")
    gen.add_argument("--gamma1", type=float, default=0.5,
                     help="core prior probability (default: 0.5)")
    for flag in ("c11", "c12", "c22", "theta1", "theta2", "c", "delta"):
        gen.add_argument(f"--{flag}", type=float, default=None,
                         help=f"mixing parameter {flag}")
    gen.add_argument("--r", type=float, default=None,
                     help="degree ratio of the theta parametrization")
    gen.add_argument("--alpha1", type=float, default=1.0,
                     help="weak-family core coefficient (default: 1.0)")
    gen.add_argument("--alpha2", type=float, default=1.0,
                     help="weak-family periphery coefficient (default: 1.0)")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    gen.add_argument("--output", required=True,
                     help="output path prefix (writes .edges / .truth.tsv)")
    gen.set_defaults(func=cmd_generate)

    det = sub.add_parser("detect", help="full EM + BP core-periphery fit")
    det.add_argument("--input", required=True, help="edge-list file")
    det.add_argument("--restarts", type=int, default=5,
                     help="EM restarts (default: 5)")
    det.add_argument("--em-tol", type=float, default=1e-6,
                     help="relative parameter-change tolerance (default: 1e-6)")
    det.add_argument("--em-max-iter", type=int, default=100,
                     help="max EM iterations (default: 100)")
    det.add_argument("--bp-tol", type=float, default=1e-8,
                     help="BP message tolerance (default: 1e-8)")
    det.add_argument("--bp-max-iter", type=int, default=200,
                     help="max BP sweeps per E-step (default: 200)")
    det.add_argument("--init-spread", type=float, default=0.2,
                     help="relative spread of random initial densities "
                          "(default: 0.2)")
    det.add_argument("--damping", type=float, default=0.0,
                     help="BP damping factor in [0, 1) (default: 0, off)")
    det.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    det.add_argument("--output", required=True,
                     help="output prefix (.vertices.csv / .summary.json)")
    det.set_defaults(func=cmd_detect)

    dd = sub.add_parser("detect-degree",
                        help="degree-only fixed-point model fit")
    dd.add_argument("--input", required=True, help="edge-list file")
    dd.add_argument("--tol", type=float, default=1e-10,
                    help="fixed-point tolerance on (gamma, r) (default: 1e-10)")
    dd.add_argument("--max-iter", type=int, default=500,
                    help="max fixed-point iterations (default: 500)")
    dd.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    dd.add_argument("--output", required=True,
                    help="output prefix (.vertices.csv / .summary.json)")
    dd.set_defaults(func=cmd_detect_degree)

    sd = sub.add_parser("split-degree", help="naive fixed-fraction degree split")
    sd.add_argument("--input", required=True, help="edge-list file")
    sd.add_argument("--core-fraction", type=float, default=0.5,
                    help="fraction of vertices in the core (default: 0.5)")
    sd.add_argument("--output", required=True,
                    help="output prefix (.vertices.csv / .summary.json)")
    sd.set_defaults(func=cmd_split_degree)

    bm = sub.add_parser("benchmark", help="planted-structure error-rate sweep")
    bm.add_argument("--n", type=int, default=100_000,
                    help="vertices per trial network (default: 100000)")
    bm.add_argument("--trials", type=int, default=10,
                    help="networks per grid point (default: 10)")
    bm.add_argument("--gamma1", type=float, default=0.5,
                    help="core prior (default: 0.5)")
    bm.add_argument("--theta1", type=float, default=None,
                    help="theta-family strength (enables the theta2 sweep)")
    bm.add_argument("--r", type=float, default=2.0,
                    help="theta-family degree ratio (default: 2.0)")
    bm.add_argument("--theta2-grid", default=None,
                    help="comma-separated theta2 values (default: 11 "
                         "admissible points)")
    bm.add_argument("--grid-points", type=int, default=11,
                    help="points in the auto theta2 grid (default: 11)")
    bm.add_argument("--c", type=float, default=None,
                    help="weak-family mean degree (enables the delta sweep)")
    bm.add_argument("--alpha1", type=float, default=1.0,
                    help="weak-family core coefficient (default: 1.0)")
    bm.add_argument("--alpha2", type=float, default=1.0,
                    help="weak-family periphery coefficient (default: 1.0)")
    bm.add_argument("--delta-grid", default=None,
                    help="comma-separated delta values for the weak sweep")
    bm.add_argument("--methods", default="bp_em,degree_em,naive",
                    help="comma-separated subset of bp_em,degree_em,naive "
                         "(default: all)")
    bm.add_argument("--true-params", action="store_true",
                    help="run BP with planted parameters (skip EM)")
    bm.add_argument("--restarts", type=int, default=3,
                    help="EM restarts per bp_em trial (default: 3)")
    bm.add_argument("--workers", type=int,
                    default=int(os.environ.get("COREPERIPHERY_WORKERS",
                                               os.cpu_count() or 1)),
                    help="trial worker threads (default: available cores)")
    bm.add_argument("--plot-script", action="store_true",
                    help="also emit a gnuplot script for the error figure")
    bm.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    bm.add_argument("--output", required=True,
                    help="output prefix (.sweep.csv)")
    bm.set_defaults(func=cmd_benchmark)

    oc = sub.add_parser("oracle-check",
                        help="BP vs exact enumeration on built-in graphs")
    oc.add_argument("--tol", type=float, default=1e-5,
                    help="max allowed deviation (default: 1e-5)")
    oc.add_argument("--ambient-n", type=float, default=1e6,
                    help="ambient network size for density scaling "
                         "(default: 1e6)")
    oc.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    oc.add_argument("--output", default=None,
                    help="optional manifest path prefix")
    oc.set_defaults(func=cmd_oracle_check)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Expand --config FILE into flags injected right after the subcommand,
    so anything given explicitly on the command line still wins."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ValueError("--config requires a file path")
    with open(argv[at + 1], encoding="utf-8") as f:
        config = json.load(f)
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object of flag values")
    rest = argv[:at] + argv[at + 2:]
    for pos, token in enumerate(rest):
        if not token.startswith("-"):
            break
    else:
        return rest  # no subcommand; let argparse report the usage error
    injected: list[str] = []
    for key, value in config.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                injected.append(flag)
        else:
            injected.extend([flag, str(value)])
    return rest[: pos + 1] + injected + rest[pos + 1:]


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _apply_config(list(argv))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the user-error code
        # (0 for --help)
        return EXIT_OK if exc.code == 0 else EXIT_USER
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, em.FitFailureError,
            em.DegenerateGroupError) as exc:
        logger.error("%s", exc)
        return EXIT_USER
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
