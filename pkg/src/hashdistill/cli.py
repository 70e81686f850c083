"""Command-line entry point.

Every command writes its manifest (command, parameters, seed, version and a
SHA-256 digest of the payload) as a leading ``# manifest:`` comment for CSV
and text output, or as a ``manifest`` field for JSON output. Re-running the
same manifest reproduces the payload byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

from . import __version__
from .belldiag import IIDWernerSpec, werner_distribution
from .bounds import (
    epsilon_for_output_fidelity,
    rate_curve,
    single_pair_threshold,
    yield_lower_bound,
)
from .codes import builtin, collisions_without_round, FixedSchedule, verify
from .entropy import (
    hartley,
    shannon_and_asymptotic_rate,
    smooth_hartley_generic,
    smooth_hartley_werner,
)
from .protocol import RoundString, Variant, compile_schedule, sample_schedule
from .simulator import SimulationConfig, TruncationPolicy, run_experiment

SIM_HEADER = (
    "n,f_in,variant,mode,rounds,trials,mean_fidelity,std_err,reference,eps_trunc,f_lb,seed"
).split(",")
NO_GUARANTEE = "no guarantee"


class CLIError(ValueError):
    pass


def fmt(x) -> str:
    """Float at 12 significant digits; other values via ``str``; None as empty."""
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# --- argument parsing helpers ------------------------------------------------

def parse_int_range(text: str) -> list[int]:
    """``"a..b"`` (inclusive), comma lists, or a mix such as ``"1,4..6"``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise CLIError(f"empty range {part!r}")
            out.extend(range(lo_i, hi_i + 1))
        else:
            out.append(int(part))
    if not out:
        raise CLIError(f"no values in {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise CLIError(f"no values in {text!r}")
    return vals


def _int_range(text: str) -> list[int]:
    try:
        return parse_int_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return parse_float_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _split(text: str):
    if text in ("auto", "optimized"):
        return "optimized"
    try:
        e1, e2 = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--eps-split takes 'auto' or 'EPS1,EPS2'") from None
    return (e1, e2)


# --- manifest and emitters ---------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    command: str
    params: dict
    seed: int | None
    version: str
    digest: str

    def to_json(self) -> dict:
        return asdict(self)


def _params(args: argparse.Namespace) -> dict:
    skip = {"func", "command", "output"}
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}


def _manifest(args: argparse.Namespace, payload: str) -> RunManifest:
    return RunManifest(
        command=args.command,
        params=_params(args),
        seed=getattr(args, "seed", None),
        version=__version__,
        digest=hashlib.sha256(payload.encode()).hexdigest(),
    )


def emit_csv(args, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    body = buf.getvalue()
    man = _manifest(args, body)
    return f"# manifest: {json.dumps(man.to_json(), sort_keys=True)}\n" + body


def emit_json(args, data: dict) -> str:
    data = _jsonable(data)
    body = json.dumps(data, indent=2)
    man = _manifest(args, body)
    return json.dumps({"manifest": man.to_json(), **data}, indent=2) + "\n"


def emit_text(args, lines: Sequence[str]) -> str:
    body = "".join(line + "\n" for line in lines)
    man = _manifest(args, body)
    return f"# manifest: {json.dumps(man.to_json(), sort_keys=True)}\n" + body


# --- commands ----------------------------------------------------------------

def _eps(args) -> float:
    if args.eps is not None:
        return args.eps
    return epsilon_for_output_fidelity(args.f_out)


def cmd_bounds(args) -> str:
    rep = yield_lower_bound(IIDWernerSpec(args.fidelity, args.n), _eps(args), args.eps_split)
    d = {"f_in": args.fidelity, **rep.as_dict()}
    d["status"] = "guaranteed" if rep.guaranteed else NO_GUARANTEE
    if args.format == "json":
        return emit_json(args, d)
    if args.format == "csv":
        return emit_csv(args, list(d), [list(d.values())])
    lines = [
        f"n={rep.n} f_in={fmt(args.fidelity)} eps={fmt(rep.eps)}",
        f"eps1={fmt(rep.eps1)} eps2={fmt(rep.eps2)} H0^eps1={fmt(rep.h0_eps1)} bits",
        f"rounds={rep.rounds} m={rep.m} R={fmt(rep.rate)}",
        f"non-tight m={rep.m_nontight}",
        d["status"] if not rep.guaranteed else f"guaranteed pairs: {rep.m}",
    ]
    return emit_text(args, lines)


def cmd_rate_curve(args) -> str:
    rows = rate_curve(args.fidelity, args.f_out, args.n)
    header = ["f_in", "n", "eps1", "eps2", "h0_eps1", "m", "rate"]
    data = [[r.f_in, r.n, r.eps1, r.eps2, r.h0_eps1, r.m, r.rate] for r in rows]
    if args.format == "json":
        return emit_json(args, {"rows": [dict(zip(header, row)) for row in data]})
    return emit_csv(args, header, data)


def cmd_threshold(args) -> str:
    results = [(f, single_pair_threshold(f, args.f_out, args.n_max)) for f in args.fidelity]
    if args.format == "json":
        return emit_json(
            args, {"f_out": args.f_out, "thresholds": [{"f_in": f, "n_min": n} for f, n in results]}
        )
    if args.format == "csv":
        return emit_csv(args, ["f_in", "f_out", "n_min"], [[f, args.f_out, n] for f, n in results])
    if len(results) == 1:
        n = results[0][1]
        return emit_text(args, [str(n) if n is not None else "none"])
    return emit_text(args, [f"{fmt(f)}: {n if n is not None else 'none'}" for f, n in results])


def cmd_entropy(args) -> str:
    spec = IIDWernerSpec(args.fidelity, args.n)
    solver = args.solver
    if solver == "auto":
        solver = "werner" if args.fidelity > 0.25 else "generic"
    if solver == "werner":
        res = smooth_hartley_werner(spec, args.eps)
        h0 = 0.0 if args.fidelity == 1.0 else 2.0 * args.n
    else:
        p = werner_distribution(spec)
        res = smooth_hartley_generic(p, args.eps)
        h0 = hartley(p)
    h, rate = shannon_and_asymptotic_rate(args.fidelity)
    d = {
        "n": args.n,
        "f_in": args.fidelity,
        "eps": args.eps,
        "solver": solver,
        "hartley": h0,
        "smooth_hartley": res.value,
        "k": res.k,
        "log2_k": res.log2_k,
        "retained_mass": res.retained_mass,
        "boundary_class": res.boundary_class,
        "boundary_fraction": res.boundary_fraction,
        "shannon_per_pair": h,
        "asymptotic_rate": rate,
    }
    if args.format == "json":
        return emit_json(args, d)
    if args.format == "csv":
        return emit_csv(args, list(d), [list(d.values())])
    return emit_text(args, [f"{k}={fmt(v)}" for k, v in d.items()])


def cmd_simulate(args) -> str:
    cfg = SimulationConfig(
        n=args.n,
        fidelity=args.fidelity,
        rounds=tuple(args.rounds),
        trials=args.trials,
        variant=args.variant,
        mode=args.mode,
        truncation=TruncationPolicy.parse(args.truncation),
        seed=args.seed,
    )
    results = run_experiment(cfg)
    rows = [
        [
            r.n,
            args.fidelity,
            cfg.variant.value,
            cfg.mode,
            r.rounds,
            r.trials,
            r.mean_fidelity,
            r.std_err,
            r.reference,
            r.eps_trunc,
            r.f_lb,
            args.seed,
        ]
        for r in results
    ]
    if args.format == "json":
        return emit_json(args, {"rows": [dict(zip(SIM_HEADER, row)) for row in rows]})
    return emit_csv(args, SIM_HEADER, rows)


def _schedule_from_args(args) -> FixedSchedule:
    if args.schedule_file:
        return FixedSchedule.from_file(args.schedule_file, args.mode)
    return builtin(args.code)


def cmd_verify_codes(args) -> str:
    schedule = _schedule_from_args(args)
    variants = ["cnot", "cz"] if args.variant == "both" else [args.variant]
    reports = [verify(schedule, v) for v in variants]
    if args.format == "json":
        results = []
        for rep in reports:
            d = rep.to_json()
            d["table"] = rep.table
            if schedule.mode == "correct":
                d["round_removal_collisions"] = [
                    len(collisions_without_round(schedule, k, rep.variant))
                    for k in range(len(schedule.rounds))
                ]
            results.append(d)
        return emit_json(args, {"code": schedule.name, "mode": schedule.mode, "results": results})
    lines = [f"code {schedule.name} ({schedule.mode}), n={schedule.n}, survivors={schedule.survivors}"]
    for k, s in enumerate(schedule.rounds):
        lines.append(f"  S{k + 1} = {s}")
    for rep in reports:
        lines.append(f"variant {rep.variant}:")
        lines.append(f"  {'error':<{3 * rep.n}} syndrome  residual")
        for err, row in rep.table.items():
            lines.append(f"  {err:<{3 * rep.n}} {row['syndrome']:<9} {row['residual']}")
        lines.append(
            f"  distinct_syndromes={rep.distinct_syndromes} detected={rep.detected}/{rep.errors - 1}"
            f" corrected={rep.corrected}/{rep.errors} collisions={len(rep.collisions)}"
        )
    return emit_text(args, lines)


def cmd_compile(args) -> str:
    if args.strings:
        schedule = [RoundString.parse(s) for s in args.strings]
    elif args.code:
        schedule = list(builtin(args.code).rounds)
    else:
        if args.n is None or args.rounds is None or args.seed is None:
            raise CLIError("give --strings, --code, or --n/--rounds/--seed for a random schedule")
        import numpy as np

        schedule = sample_schedule(args.n, args.rounds, np.random.default_rng(args.seed))
    for k, s in enumerate(schedule[1:], start=1):
        if s.n != schedule[0].n - k:
            raise CLIError(f"round {k + 1} covers {s.n} pairs, expected {schedule[0].n - k}")
    items = compile_schedule(schedule, args.variant)
    return emit_json(
        args,
        {
            "variant": Variant(args.variant).value,
            "strings": [str(s) for s in schedule],
            "gates": [it.to_json() for it in items],
        },
    )


def cmd_oracle(args) -> str:
    from .oracle import dm_simulate, validate_label_maps
    from .simulator import run_trial_exact_branch

    if args.validate:
        return emit_json(args, validate_label_maps(args.variant))
    schedule = [RoundString.parse(s) for s in args.strings]
    p = werner_distribution(IIDWernerSpec(args.fidelity, schedule[0].n if schedule else args.n))
    oracle = dm_simulate(p, schedule, args.variant).fidelity
    exact = run_trial_exact_branch(p, schedule, args.variant)
    return emit_json(args, {"oracle": oracle, "exact_branch": exact, "difference": abs(oracle - exact)})


# --- parser ------------------------------------------------------------------

def _add_eps(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--f-out", type=float, default=0.99, help="target output fidelity (default 0.99)")
    g.add_argument("--eps", type=float, default=None, help="purified-distance budget instead of --f-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hashdistill",
        description="Finite-size bounds and exact simulation for one-way hashing distillation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-o", "--output", help="write to this file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("bounds", help="yield and rate lower bound for IID Werner pairs")
    p.add_argument("--fidelity", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_eps(p)
    p.add_argument("--eps-split", type=_split, default="optimized", help="'auto' or 'EPS1,EPS2'")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rate-curve", help="optimized bound over a fidelity x n grid (CSV)")
    p.add_argument("--fidelity", type=_float_list, required=True, help="comma list")
    p.add_argument("--n", type=_int_range, required=True, help="e.g. 10..200 or 10,20,50")
    p.add_argument("--f-out", type=float, default=0.99)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_rate_curve)

    p = sub.add_parser("threshold", help="smallest n that guarantees one output pair")
    p.add_argument("--fidelity", type=_float_list, required=True, help="comma list")
    p.add_argument("--f-out", type=float, default=0.99)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("entropy", help="Hartley, smooth Hartley and Shannon entropies")
    p.add_argument("--fidelity", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--solver", choices=("auto", "werner", "generic"), default="auto")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("simulate", help="seeded simulation sweep over round counts (CSV)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fidelity", type=float, required=True)
    p.add_argument("--rounds", type=_int_range, required=True, help="e.g. 0..9")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--variant", choices=("cnot", "cz"), default="cnot")
    p.add_argument(
        "--mode", choices=("exact-branch", "sampled-syndrome"), default="exact-branch"
    )
    p.add_argument("--truncation", default="none", help="none, top-k:K or mass:DELTA")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-codes", help="syndrome tables of the fixed-string codes")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--code", choices=("n5-correct", "n4-detect"))
    g.add_argument("--schedule-file", help="one round string per line (unverified custom code)")
    p.add_argument("--mode", choices=("correct", "detect"), default="correct",
                   help="code mode for --schedule-file")
    p.add_argument("--variant", choices=("cnot", "cz", "both"), default="both")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_verify_codes)

    p = sub.add_parser("compile", help="gate schedule JSON for given or sampled round strings")
    p.add_argument("--strings", action="append", help="round string, repeat per round")
    p.add_argument("--code", choices=("n5-correct", "n4-detect"))
    p.add_argument("--n", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--variant", choices=("cnot", "cz"), default="cnot")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("oracle", help=argparse.SUPPRESS)
    p.add_argument("--strings", action="append", default=[])
    p.add_argument("--fidelity", type=float, default=0.9)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--variant", choices=("cnot", "cz"), default="cnot")
    p.add_argument("--validate", action="store_true", help="check label maps against the gates")
    p.set_defaults(func=cmd_oracle)
    return parser


def _hide_suppressed(parser: argparse.ArgumentParser) -> None:
    # subparsers with help=SUPPRESS still show in the choices list; drop them
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            action._choices_actions = [a for a in action._choices_actions if a.help != argparse.SUPPRESS]


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    _hide_suppressed(parser)
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], str] = args.func
    try:
        out = func(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"hashdistill {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
