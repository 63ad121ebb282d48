"""Command-line front end.

    bitraj check      [--config PATH] [--seed N] [--dim D] [--grid M] [--out DIR]
    bitraj experiment NAME [--config PATH] [--n N] [--grid M] [--out DIR]
    bitraj table      [--config PATH] [--schedule NAME] [--out DIR]

Exit status: 0 when every check passes, 1 when one fails, 2 for a bad
configuration or unknown experiment.
"""
import argparse
import io
import json
import os
import sys
import tempfile
from importlib import resources

from .biprob import full_table
from .composite import TRANSFER, convergence_rows, reduced_biprob_exact, surrogate_biprob, write_convergence_csv
from .config import RunConfig, load_config, parse_config
from .errors import BiTrajError, SchemaError
from .suite import configured_reports, random_suite, report_document
from .witnesses import dephasing_witness

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_CONFIG = "qubit_witness.json"


def bundled_config(name: str) -> str:
    return resources.files("bitraj").joinpath("configs").joinpath(name).read_text(encoding="utf-8")


def _load(args) -> RunConfig:
    if args.config is None:
        return parse_config(bundled_config(DEFAULT_CONFIG))
    if os.path.exists(args.config):
        return load_config(args.config)
    return parse_config(bundled_config(args.config))


def _apply_tolerances(cfg: RunConfig, args):
    if args.tol_equality is not None:
        cfg.tol_equality = args.tol_equality
    if args.tol_psd is not None:
        cfg.tol_psd = args.tol_psd


def _write_atomic(directory: str, name: str, text: str):
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.chmod(tmp, 0o644)
    os.replace(tmp, os.path.join(directory, name))


def _emit_report(doc: dict, args):
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write_atomic(args.out, "report.json", text)
    sys.stdout.write(text)


def cmd_check(args) -> int:
    reports = []
    seed = args.seed
    if args.config is not None:
        cfg = _load(args)
        _apply_tolerances(cfg, args)
        reports += configured_reports(cfg)
        seed = cfg.seed if seed is None else seed
    if args.config is None or args.seed is not None:
        tol = args.tol_equality or 1e-10
        reports += random_suite(0 if seed is None else seed, args.dim, tol, args.tol_psd or 1e-10, args.grid)
    doc = report_document(reports, seed)
    _emit_report(doc, args)
    return EXIT_OK if all(e["passed"] for e in doc["experiments"]) else EXIT_FAIL


def _convergence(args) -> list:
    comp, init_a, init_b, schedule, fp, fm = dephasing_witness()
    exact = reduced_biprob_exact(comp, init_a, init_b, schedule, fp, fm)
    ms = [args.grid * 2**k for k in range(4)]
    errs = [abs(surrogate_biprob(comp, init_a, init_b, schedule, fp, fm, m, method=TRANSFER) - exact) for m in ms]
    return convergence_rows(ms, errs)


def cmd_experiment(args) -> int:
    if args.name == "convergence":
        rows = _convergence(args)
        buf = io.StringIO()
        write_convergence_csv(rows, buf)
        if args.out:
            _write_atomic(args.out, "convergence.csv", buf.getvalue())
        sys.stdout.write(buf.getvalue())
        ok = all(0.3 <= r <= 0.7 for _, _, r in rows[1:])
        return EXIT_OK if ok else EXIT_FAIL
    cfg = _load(args)
    _apply_tolerances(cfg, args)
    reports = configured_reports(cfg, args.name, args.grid, args.n)
    for r in reports:
        value = f" value={r.witness['value']:.5f}" if r.witness and "value" in r.witness else ""
        print(f"{r.name}{value} deviation={r.deviation:.3e} threshold={r.threshold:g} "
              f"{'PASS' if r.passed else 'FAIL'}", file=sys.stderr)
        if value:
            print(f"{r.witness['value']:.5f}")
    if args.out:
        _write_atomic(args.out, "report.json", json.dumps(report_document(reports, cfg.seed), indent=2) + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_table(args) -> int:
    cfg = _load(args)
    if not cfg.schedules:
        raise SchemaError("$.schedules", "no schedule to tabulate")
    name = args.schedule or next(iter(cfg.schedules))
    if name not in cfg.schedules:
        raise SchemaError("$.schedules", f"unknown schedule {name!r}")
    text = full_table(cfg.system, cfg.init, cfg.schedules[name]).to_csv()
    if args.out:
        _write_atomic(args.out, f"table_{name}.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file, or the name of a bundled one")
    common.add_argument("--seed", type=int, help="seed for random instances")
    common.add_argument("--dim", type=int, default=3, help="dimension of random instances")
    common.add_argument("--grid", type=int, default=8, help="coarsest number of grid steps")
    common.add_argument("--n", type=int, help="number of Zeno re-checks")
    common.add_argument("--tol-equality", type=float, dest="tol_equality")
    common.add_argument("--tol-psd", type=float, dest="tol_psd")
    common.add_argument("--out", help="directory for report and table files")
    parser = argparse.ArgumentParser(prog="bitraj", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="run the invariant suite")
    exp = sub.add_parser("experiment", parents=[common], help="run one named experiment")
    exp.add_argument("name")
    tab = sub.add_parser("table", parents=[common], help="write a bi-probability table as CSV")
    tab.add_argument("--schedule")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"check": cmd_check, "experiment": cmd_experiment, "table": cmd_table}[args.command]
    try:
        return handler(args)
    except (BiTrajError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
