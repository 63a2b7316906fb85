"""Command-line interface: ``lnlasso {generate,solve,experiment,convergence,figures}``.

Options can also come from ``--config FILE``, a flat ``key = value`` file
whose keys are the long option names without the leading dashes
(``lambda-grid = 1e-5,1e-1``). Command-line flags win over the file.

Exit codes: 0 success, 1 unreadable or malformed input, 2 usage error,
3 numerical failure.
"""
import argparse
import csv
import glob
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import experiments as ex
from .errors import (InvalidArgumentError, InvalidConfigurationError, NumericalFailureError,
                     ParseError)
from .model import predict
from .solver import SolverConfig, solve, write_diagnostics
from .synth import SyntheticSpec, chain_spec, generate, grid_spec, read_instance, write_instance

log = logging.getLogger("lnlasso")

EXIT_INPUT, EXIT_USAGE, EXIT_NUMERIC = 1, 2, 3

SOLUTION_FILE = "solution.csv"
DIAGNOSTICS_FILE = "diagnostics.csv"
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.csv"
FIGURE_ACCURACY_FILE = "figure_accuracy.csv"
FIGURE_CONVERGENCE_FILE = "figure_convergence.csv"


def _float_list(text):
    try:
        values = [float(t) for t in str(text).replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _flag(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# name -> (type, default); every option that may appear in a config file
OPTIONS = {
    "seed": (int, 0),
    "out-dir": (str, "."),
    "topology": (str, "chain"),
    "p": (float, 0.4),
    "p-grid": (_float_list, [0.1, 0.3, 0.5, 0.7, 0.9]),
    "lambda": (float, 0.1),
    "lambda-grid": (_float_list, list(ex.PAPER_LAMBDA_GRID)),
    "reps": (int, 20),
    "max-iters": (int, 1000),
    "rel-tol": (float, 1e-6),
    "tau-scale": (float, 0.9),
    "intra-weight": (float, 100.0),
    "inter-weight": (float, 1.0),
    "dim": (int, 3),
    "normalize": (_flag, True),
    "freeze-instance": (_flag, False),
    "instance": (str, None),
    "edges": (str, None),
    "nodes": (str, None),
    "plot": (_flag, False),
}


class UsageError(Exception):
    pass


def read_config(path):
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key not in OPTIONS or key in ("config",):
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _add(parser, *names):
    for name in names:
        typ, default = OPTIONS[name]
        if typ is _flag:
            group = parser.add_mutually_exclusive_group()
            group.add_argument(f"--{name}", dest=name, action="store_const", const=True,
                               default=None)
            group.add_argument(f"--no-{name}", dest=name, action="store_const", const=False)
        else:
            parser.add_argument(f"--{name}", dest=name, type=typ, default=None,
                                help=f"default: {default}")


def build_parser():
    parser = argparse.ArgumentParser(prog="lnlasso", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = ["seed", "out-dir"]
    p = sub.add_parser("generate", help="write a synthetic chain/grid instance as CSV")
    _add(p, *common, "topology", "p", "intra-weight", "inter-weight", "dim", "normalize")

    p = sub.add_parser("solve", help="solve one instance read from CSV files")
    _add(p, *common, "instance", "edges", "nodes", "lambda", "max-iters", "rel-tol",
         "tau-scale")

    p = sub.add_parser("experiment", help="accuracy sweep over labeling rates and lambdas")
    _add(p, *common, "topology", "p-grid", "lambda-grid", "reps", "max-iters", "rel-tol",
         "tau-scale", "freeze-instance")

    p = sub.add_parser("convergence", help="accuracy after every iteration at one labeling rate")
    _add(p, *common, "topology", "p", "lambda-grid", "reps", "max-iters", "rel-tol",
         "tau-scale", "freeze-instance")

    p = sub.add_parser("figures", help="aggregate experiment CSVs into figure data")
    p.add_argument("inputs", nargs="+", help="directories or CSV files from experiment/convergence")
    _add(p, "out-dir", "plot")

    for action in sub.choices.values():
        action.add_argument("--config", default=None, help="flat key = value options file")
    return parser


def resolve(args):
    """Merge command-line values, config file values and defaults into a dict."""
    from_file = read_config(args.config) if args.config else {}
    merged = {}
    for key, value in vars(args).items():
        if key not in OPTIONS:
            merged[key] = value
            continue
        if value is None and key in from_file:
            try:
                value = OPTIONS[key][0](from_file[key])
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config value for {key!r}: {exc}")
        merged[key] = OPTIONS[key][1] if value is None else value
    return merged


def _base_spec(opts):
    kw = dict(intra_weight=opts.get("intra-weight", 100.0),
              inter_weight=opts.get("inter-weight", 1.0),
              feature_dim=opts.get("dim", 3),
              normalize_features=opts.get("normalize", True))
    if opts["topology"] == "chain":
        return chain_spec(**kw)
    if opts["topology"] == "grid":
        return grid_spec(**kw)
    raise UsageError(f"--topology must be chain or grid, got {opts['topology']!r}")


def _solver_config(opts, lam):
    return SolverConfig(lam=lam, max_iters=opts["max-iters"], rel_tol=opts["rel-tol"],
                        tau_scale=opts["tau-scale"])


def cmd_generate(opts):
    spec = replace(_base_spec(opts), labeling_rate=opts["p"], seed=opts["seed"])
    inst = generate(spec)
    write_instance(inst, opts["out-dir"])
    print(f"wrote {opts['topology']} instance: {inst.graph.num_nodes} nodes, "
          f"{inst.graph.num_edges} edges, {inst.dataset.num_train} labeled -> {opts['out-dir']}")


def cmd_solve(opts):
    if opts["instance"] and (opts["edges"] or opts["nodes"]):
        raise UsageError("--instance cannot be combined with --edges/--nodes")
    if opts["instance"]:
        graph, dataset, _ = read_instance(opts["instance"])
    elif opts["edges"] and opts["nodes"]:
        from .graph import read_edges
        from .model import read_nodes
        dataset = read_nodes(opts["nodes"])
        graph = read_edges(opts["edges"], num_nodes=dataset.num_nodes)
    else:
        raise UsageError("give --instance DIR or both --edges and --nodes")
    config = replace(_solver_config(opts, opts["lambda"]), record_diagnostics=True)
    run = solve(graph, dataset, config)
    out = opts["out-dir"]
    os.makedirs(out, exist_ok=True)
    y_hat = predict(dataset, run.final_primal)
    with open(os.path.join(out, SOLUTION_FILE), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"w{k}" for k in range(dataset.dim)] + ["y_hat"])
        for i in range(dataset.num_nodes):
            writer.writerow([i] + [repr(float(v)) for v in run.final_primal[i]] + [int(y_hat[i])])
    write_diagnostics(run, os.path.join(out, DIAGNOSTICS_FILE))
    final = run.diagnostics[-1].objective
    print(f"{run.iterations_used} iterations, objective {final:.10g}, "
          f"{'converged' if run.converged else 'iteration budget reached'}")


def _experiment_spec(opts, p_grid):
    return ex.ExperimentSpec(base=_base_spec(opts), p_grid=tuple(p_grid),
                             lambda_grid=tuple(opts["lambda-grid"]), repetitions=opts["reps"],
                             solver=_solver_config(opts, opts["lambda-grid"][0]),
                             master_seed=opts["seed"],
                             freeze_instance=opts["freeze-instance"])


def cmd_experiment(opts):
    spec = _experiment_spec(opts, opts["p-grid"])
    rows = ex.run_experiment(spec)
    out = opts["out-dir"]
    os.makedirs(out, exist_ok=True)
    ex.write_results(rows, os.path.join(out, RESULTS_FILE))
    summary = ex.summarize(rows)
    ex.write_summary(summary, os.path.join(out, SUMMARY_FILE))
    for r in summary:
        print(f"p={r['p']:<4g} lambda={r['lambda']:<6g} accuracy={r['mean_accuracy']:.3f} "
              f"+- {r['std_accuracy']:.3f}  bayes={r['mean_bayes_accuracy']:.3f}"
              + (f"  failed={r['failed']}" if r["failed"] else ""))


def cmd_convergence(opts):
    spec = _experiment_spec(opts, [opts["p"]])
    curves = ex.run_convergence(spec)
    for path in ex.write_curves(curves, opts["out-dir"]):
        print(f"wrote {path}")


def _read_table(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header:
            raise ParseError(f"expected header {','.join(header)!r}", path, 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields", path, lineno)
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ParseError(f"non-numeric field in {','.join(row)!r}",
                                 path, lineno) from None
    return rows


def _collect(inputs):
    results, curves = [], []
    for item in inputs:
        if os.path.isdir(item):
            paths = sorted(glob.glob(os.path.join(item, RESULTS_FILE)))
            paths += sorted(glob.glob(os.path.join(item, "convergence_lambda_*.csv")))
        elif os.path.isfile(item):
            paths = [item]
        else:
            raise ParseError("no such file or directory", item)
        for path in paths:
            with open(path, encoding="utf-8") as fh:
                first = fh.readline().strip()
            if first == ",".join(ex.RESULTS_HEADER):
                results += _read_table(path, ex.RESULTS_HEADER)
            elif first == ",".join(ex.CURVE_HEADER):
                curves += _read_table(path, ex.CURVE_HEADER)
            else:
                raise ParseError("not an experiment or convergence CSV", path, 1)
    return sorted(results), sorted(curves)


def cmd_figures(opts):
    results, curves = _collect(opts["inputs"])
    if not results and not curves:
        raise ParseError("no experiment or convergence CSVs found", " ".join(opts["inputs"]))
    out = opts["out-dir"]
    os.makedirs(out, exist_ok=True)
    if results:
        rows = [dict(zip(ex.RESULTS_HEADER, r)) for r in results]
        for r in rows:
            r["rep"] = int(r["rep"])
        ex.write_results(rows, os.path.join(out, FIGURE_ACCURACY_FILE))
    if curves:
        rows = [{"lambda": lam, "iter": int(k), "accuracy": a} for lam, k, a in curves]
        ex._write(os.path.join(out, FIGURE_CONVERGENCE_FILE), ex.CURVE_HEADER, rows)
    if opts["plot"]:
        _plot(results, curves, out)
    print(f"figure data written to {out}")


def _plot(results, curves, out):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib is not installed; skipping plots")
        return
    if results:
        arr = np.array(results)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for lam in np.unique(arr[:, 1]):
            sel = arr[arr[:, 1] == lam]
            ps = np.unique(sel[:, 0])
            ax.plot(ps, [np.nanmean(sel[sel[:, 0] == p, 3]) for p in ps], marker="o",
                    label=f"lambda={lam:g}")
        ax.axhline(np.mean(arr[:, 4]), color="k", linestyle="--", label="Bayes")
        ax.set_xlabel("labeling rate p")
        ax.set_ylabel("accuracy (unlabeled nodes)")
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(os.path.join(out, "accuracy_vs_p.svg"))
        plt.close(fig)
    if curves:
        arr = np.array(curves)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for lam in np.unique(arr[:, 0]):
            sel = arr[arr[:, 0] == lam]
            ax.plot(sel[:, 1], sel[:, 2], label=f"lambda={lam:g}")
        ax.set_xscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("accuracy (unlabeled nodes)")
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(os.path.join(out, "accuracy_vs_iteration.svg"))
        plt.close(fig)


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "convergence": cmd_convergence,
    "figures": cmd_figures,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        COMMANDS[args.command](opts)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidArgumentError, InvalidConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
