"""Command-line entry point: ``income-circulation <subcommand> ...``.

Exit codes: 0 on success (JSON on stdout or ``--out``), 1 on domain errors
(structured JSON on stderr), 2 on usage errors such as a missing or
unparsable input file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import blocks, core, dynamics, generosity, graph, ingest
from .errors import ICMError

log = logging.getLogger("income_circulation")

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _load(loader, path):
    try:
        return loader(path)
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from exc


def _emit(doc, args) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _groups(x: core.WealthVector, h_frac: float, l_frac: float):
    order = np.argsort(-x.values, kind="stable")
    h = max(1, int(np.ceil(h_frac * x.n)))
    l = max(1, int(np.ceil(l_frac * x.n)))
    return [int(i) for i in order[:h]], [int(i) for i in order[x.n - l:]]


# subcommands

def cmd_build(args):
    records = _load(ingest.read_transactions, args.transactions)
    wealth = _load(ingest.read_wealth_csv, args.wealth)
    if args.window:
        window = ingest.EstimationWindow.parse(args.window)
    else:
        times = [r.time for r in records] or [0]
        window = ingest.EstimationWindow(min(times), max(times))
    mats = ingest.estimate_window(records, wealth, window, args.tolerance)
    if len(mats) > 1 and not args.average:
        raise UsageError("window spans several steps: pass --average or a single-step window")
    F = ingest.average_icm(mats, window) if args.average else next(iter(mats.values()))
    return core.matrix_to_json(F)


def cmd_validate(args):
    F = _load(core.load_matrix, args.matrix)
    sums = F.column_sums()
    return {
        "valid": True,
        "n": F.n,
        "nnz": F.nnz,
        "tolerance": F.tolerance,
        "max_column_sum_error": float(np.max(np.abs(sums - 1.0))),
        "savings": [float(s) for s in F.diagonal()],
    }


def cmd_classify(args):
    F = _load(core.load_matrix, args.matrix)
    cls = graph.classify(F, exponent_cap=args.exponent_cap)
    if args.edges:
        graph.build_graph(F).to_csv(args.edges)
    return cls.to_json()


def cmd_exponent(args):
    F = _load(core.load_matrix, args.matrix)
    k0 = graph.exponent(graph.build_graph(F), cap=args.exponent_cap)
    return {"exponent": k0, "cohesiveness": 1.0 / k0}


def cmd_simulate(args):
    F = _load(core.load_matrix, args.matrix)
    x0 = _load(core.load_wealth, args.wealth)
    if args.sigma > 0:
        rng = np.random.default_rng(args.seed)
        schedule = [dynamics.perturb(F, args.sigma, rng) for _ in range(args.steps)]
        ids = [f"seed{args.seed}:t{x0.time_index + k}" for k in range(args.steps)]
    else:
        schedule, ids = [F] * args.steps, ["F"] * args.steps
    traj = core.evolve(schedule, x0, ids)
    if args.csv:
        traj.to_csv(args.csv)
    final = traj.final
    return {
        "steps": args.steps,
        "sigma": args.sigma,
        "final": core.wealth_to_json(final),
        "monetary_base": final.monetary_base(),
        "base_drift_per_step": traj.base_drift_per_step(),
    }


def _support_rows(res, H, L):
    h = dynamics.recovery_rate(res, H)
    l = dynamics.recovery_rate(res, L)
    bound = res.bound if res.bound is not None else [None] * len(res.deviation)
    for k, (d, b, hd, ld) in enumerate(zip(res.deviation, bound, h, l)):
        yield [k, float(d), "" if b is None else float(b), float(hd), float(ld)]


def cmd_support(args):
    F = _load(core.load_matrix, args.matrix)
    x0 = _load(core.load_wealth, args.wealth)
    t0 = x0.time_index if args.t0 is None else args.t0
    ev = dynamics.SupportEvent(t0, args.h0, args.l0, args.epsilon)
    H, L = _groups(x0, args.h_frac, args.l_frac)
    header = ["k", "deviation", "bound", "h_group_delta", "l_group_delta"]
    runs = []
    seeds = [args.seed + s for s in range(args.seeds)] if args.sigma > 0 else [args.seed]
    for s in seeds:
        if args.sigma > 0:
            spec = dynamics.PerturbationSpec(args.sigma, s)
            res = dynamics.perturbed_evolve(F, x0, spec, ev, args.horizon, args.recovery_threshold)
        else:
            res = dynamics.support_experiment(F, x0, ev, args.horizon, args.recovery_threshold)
        if args.csv:
            path = Path(args.csv)
            if len(seeds) > 1:
                path = path.with_name(f"{path.stem}_seed{s}{path.suffix}")
            _write_rows(path, header, _support_rows(res, H, L))
        summary = res.summary()
        summary["seed"] = s if args.sigma > 0 else None
        runs.append(summary)
    doc = dict(runs[0]) if len(runs) == 1 else {"runs": runs}
    doc["H"], doc["L"] = H, L
    return doc


def cmd_hoarder(args):
    F = _load(core.load_matrix, args.matrix)
    dec = blocks.hoarder_decompose(F)
    doc = {"blocks": dec.to_json()}
    if args.k is not None:
        closed = blocks.hoarder_power_closed_form(dec, args.k)
        direct = core.matrix_power(F, args.k)
        doc["power"] = {
            "k": args.k,
            "max_abs_deviation": float(np.max(np.abs(closed - direct))),
            "bottom_row": [float(v) for v in closed[-1]],
        }
    if args.limit:
        lim = blocks.hoarder_limit(dec)
        doc["limit"] = {
            "bottom_row": [float(v) for v in lim[-1]],
            "max_column_sum_error": float(np.max(np.abs(lim.sum(axis=0) - 1.0))),
        }
    return doc


def cmd_report(args):
    F = _load(core.load_matrix, args.matrix)
    x0 = _load(core.load_wealth, args.wealth) if args.wealth else None
    cls = graph.classify(F, exponent_cap=args.exponent_cap)
    doc = {"schema": SCHEMA_VERSION, "classification": cls.to_json(), "notices": []}

    if x0 is not None:
        H, L = _groups(x0, args.h_frac, args.l_frac)
    else:
        H, L = [0], [F.n - 1]
    h0 = H[0] if args.h0 is None else args.h0
    l0 = L[-1] if args.l0 is None else args.l0

    if cls.verdict is graph.Verdict.COHESIVE:
        prof = generosity.generosity_profile(F, cls)
        b = generosity.beta(F, h0, l0, prof.k0)
        horizon = args.horizon
        if horizon is None:
            horizon = generosity.auto_horizon(prof, b, args.epsilon, args.recovery_threshold)
        ks = np.arange(horizon + 1)
        curve = generosity.bound_curve(prof, b, args.epsilon, ks)
        gen = prof.to_json()
        gen.update(
            h0=h0, l0=l0, epsilon=args.epsilon, beta=b,
            gamma0=generosity.gamma0(prof, b, args.epsilon),
            bound_curve=[[int(k), float(v)] for k, v in zip(ks, curve)],
        )
        doc["generosity"] = gen
        if args.csv:
            u = np.zeros(F.n)
            u[l0], u[h0] = args.epsilon, -args.epsilon
            measured = [float(np.abs(u).sum())]
            for _ in range(horizon):
                u = F.csc @ u
                measured.append(float(np.abs(u).sum()))
            _write_rows(args.csv, ["k", "bound", "measured"],
                        ([int(k), float(c), m] for k, c, m in zip(ks, curve, measured)))
        if x0 is not None:
            ev = dynamics.SupportEvent(x0.time_index, h0, l0, args.epsilon)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                res = dynamics.support_experiment(F, x0, ev, horizon, args.recovery_threshold)
            doc["support"] = res.summary()
            doc["notices"].extend(str(w.message) for w in caught)
    else:
        doc["notices"].append(
            f"generosity and bound omitted: society is {cls.verdict.value}, not Cohesive"
        )
        if cls.verdict is graph.Verdict.FRAGMENTED:
            doc["notices"].append("support experiment omitted: no recovery guarantee")

    if args.partition:
        if x0 is None:
            raise UsageError("--partition needs --wealth")
        cfg = _load(blocks.load_partition_config, args.partition)
        part = blocks.make_partition(F, x0, **cfg)
        diag = blocks.fragmented_asymptotics(part, horizon=args.partition_horizon)
        doc["partition"] = {
            "H": list(part.H), "M": list(part.M), "L": list(part.L), **diag.to_json()
        }
    return doc


COMMANDS = {
    "build": cmd_build,
    "validate": cmd_validate,
    "classify": cmd_classify,
    "exponent": cmd_exponent,
    "simulate": cmd_simulate,
    "support": cmd_support,
    "hoarder": cmd_hoarder,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON result here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--quiet", action="store_true", help="only log errors")
    common.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")

    p = argparse.ArgumentParser(prog="income-circulation", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build", parents=[common], help="estimate a matrix from transactions")
    s.add_argument("--transactions", required=True, help="CSV t,payer,payee,amount")
    s.add_argument("--wealth", required=True, help="CSV agent,wealth or agent,wealth_<t>,...")
    s.add_argument("--window", help="steps a:b (default: all steps in the file)")
    s.add_argument("--average", action="store_true", help="average the window's matrices")
    s.add_argument("--tolerance", type=float, default=core.DEFAULT_TOLERANCE)

    s = sub.add_parser("validate", parents=[common], help="check a matrix file")
    s.add_argument("--matrix", required=True)

    for name, text in (("classify", "fragmented / whole / cohesive"), ("exponent", "degrees of separation")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--matrix", required=True)
        s.add_argument("--exponent-cap", type=int, default=None)
        if name == "classify":
            s.add_argument("--edges", help="also write the edge list CSV src,dst here")

    s = sub.add_parser("simulate", parents=[common], help="evolve a wealth vector")
    s.add_argument("--matrix", required=True)
    s.add_argument("--wealth", required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--sigma", type=float, default=0.0, help="Gaussian perturbation (default 0)")
    s.add_argument("--csv", help="write the trajectory CSV here")

    s = sub.add_parser("support", parents=[common], help="eps-support experiment")
    s.add_argument("--matrix", required=True)
    s.add_argument("--wealth", required=True)
    s.add_argument("--h0", type=int, required=True)
    s.add_argument("--l0", type=int, required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--horizon", type=int, default=None, help="default: from the bound")
    s.add_argument("--t0", type=int, default=None, help="default: time of the wealth file")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seeds", type=int, default=1)
    s.add_argument("--recovery-threshold", type=float, default=dynamics.RECOVERY_THRESHOLD)
    s.add_argument("--h-frac", type=float, default=0.1)
    s.add_argument("--l-frac", type=float, default=0.1)
    s.add_argument("--csv", help="write k,deviation,bound,h_group_delta,l_group_delta here")

    s = sub.add_parser("hoarder", parents=[common], help="cash hoarder closed forms")
    s.add_argument("--matrix", required=True)
    s.add_argument("--k", type=int, default=None, help="compare closed-form F**k with the direct power")
    s.add_argument("--limit", action="store_true", help="report the k -> infinity limit")

    s = sub.add_parser("report", parents=[common], help="classification + generosity + bound")
    s.add_argument("--matrix", required=True)
    s.add_argument("--wealth")
    s.add_argument("--epsilon", type=float, default=1.0)
    s.add_argument("--h0", type=int, default=None)
    s.add_argument("--l0", type=int, default=None)
    s.add_argument("--horizon", type=int, default=None)
    s.add_argument("--exponent-cap", type=int, default=None)
    s.add_argument("--recovery-threshold", type=float, default=dynamics.RECOVERY_THRESHOLD)
    s.add_argument("--h-frac", type=float, default=0.1)
    s.add_argument("--l-frac", type=float, default=0.1)
    s.add_argument("--partition", help='JSON {"h_frac": .., "l_frac": ..} or {"H": [..], "L": [..]}')
    s.add_argument("--partition-horizon", type=int, default=10_000)
    s.add_argument("--csv", help="write k,bound,measured here")
    return p


def _fail(code: int, name: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": name, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.ERROR if args.quiet else getattr(logging, str(args.log_level).upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        doc = COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(2, "UsageError", str(exc))
    except ICMError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    except ValueError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    _emit(doc, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
