"""Command-line front end.

Exit codes: 0 verified / success, 1 counterexample found, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .alpha_solver import (
    DEFAULT_GRID,
    DEFAULT_REFINE,
    DEFAULT_SAFETY,
    ConvexityBudget,
    budget_for,
    budget_table,
    compute_alpha,
    normalize_statement,
)
from .exceptions import LpConvError
from .measure_space import MeasureSpace, function_from_dict
from .scalar_core import Exponents
from .search_engine import DIAMETER_OPTIONS, SearchOptions
from .slice_geometry import (
    FAIL,
    PASS,
    SliceSpec,
    adversarial_verify,
    modulus_of_convexity,
    slice_diameter,
    verify_instance,
    witness_functions,
)

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _floats(text):
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RxT, e.g. 2048x1024, got {text!r}")


def _statement(text):
    try:
        return normalize_statement(text)
    except LpConvError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def alpha_flags(sp):
        sp.add_argument("--grid", type=_grid, default=DEFAULT_GRID, help="R x theta points")
        sp.add_argument("--refine", type=int, default=DEFAULT_REFINE)
        sp.add_argument("--safety", type=float, default=DEFAULT_SAFETY)

    def common(sp, fmt=True):
        sp.add_argument("--out", type=Path, help="write here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("alpha", help="comparison constant alpha(eps, p)")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    alpha_flags(sp)
    common(sp)

    sp = sub.add_parser("delta", help="delta budget for a statement")
    sp.add_argument("--statement", type=_statement, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    alpha_flags(sp)
    common(sp)

    sp = sub.add_parser("verify", help="adversarial check of a delta budget")
    sp.add_argument("--statement", type=_statement)
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--atoms", type=int, default=4)
    sp.add_argument("--restarts", type=int, default=SearchOptions.restarts)
    sp.add_argument("--max-evals", type=int, default=SearchOptions.max_evaluations)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--replay", type=Path, help="check a saved witness instead of searching")
    alpha_flags(sp)
    common(sp, fmt=False)

    sp = sub.add_parser("table", help="CSV table of delta(eps, p)")
    sp.add_argument("--statement", type=_statement, default="Lemma1")
    sp.add_argument("--p-list", type=_floats, required=True)
    sp.add_argument("--eps-list", type=_floats, required=True)
    alpha_flags(sp)
    common(sp, fmt=False)

    sp = sub.add_parser("slice-diameter", help="lower estimate of a slice's diameter")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--atoms", type=int, default=2)
    sp.add_argument("--restarts", type=int, default=DIAMETER_OPTIONS.restarts)
    sp.add_argument("--max-evals", type=int, default=DIAMETER_OPTIONS.max_evaluations)
    sp.add_argument("--functional", type=Path, help="phi as measure-space JSON")
    sp.add_argument("--threads", type=int)
    common(sp, fmt=False)

    sp = sub.add_parser("modulus", help="upper estimate of the modulus of convexity")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--atoms", type=int, default=2)
    sp.add_argument("--restarts", type=int, default=DIAMETER_OPTIONS.restarts)
    sp.add_argument("--max-evals", type=int, default=DIAMETER_OPTIONS.max_evaluations)
    sp.add_argument("--threads", type=int)
    common(sp, fmt=False)
    return parser


# -- output ----------------------------------------------------------------------


def envelope(command: str, parameters: dict, results, seed: int) -> dict:
    return {
        "command": command,
        "parameters": parameters,
        "results": results,
        "version": __version__,
        "seed": seed,
    }


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _alpha_opts(args) -> dict:
    return {"grid": args.grid, "refine_steps": args.refine, "safety_factor": args.safety}


def _alpha_params(args) -> dict:
    return {"grid": list(args.grid), "refine": args.refine, "safety": args.safety}


# -- commands --------------------------------------------------------------------


def cmd_alpha(args) -> int:
    e = Exponents.from_p(args.p)
    cert = compute_alpha(args.eps, e, **_alpha_opts(args))
    if args.format == "csv":
        d = cert.to_dict()
        d["argmax_re"], d["argmax_im"] = d.pop("argmax_point")
        d["grid_resolution"] = "x".join(str(k) for k in d["grid_resolution"])
        _emit(_csv(list(d), [list(d.values())]), args.out)
    else:
        params = {"p": args.p, "eps": args.eps, **_alpha_params(args)}
        _emit(_json(envelope("alpha", params, cert.to_dict(), args.seed)), args.out)
    return EXIT_OK


def cmd_delta(args) -> int:
    e = Exponents.from_p(args.p)
    budget = budget_for(args.statement, args.eps, e, **_alpha_opts(args))
    if args.format == "csv":
        rows = [[budget.statement, e.p, budget.epsilon, budget.delta]]
        _emit(_csv(["statement", "p", "epsilon", "delta"], rows), args.out)
    else:
        params = {"statement": args.statement, "p": args.p, "eps": args.eps, **_alpha_params(args)}
        _emit(_json(envelope("delta", params, budget.to_dict(), args.seed)), args.out)
    return EXIT_OK


def _load_replay(path: Path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "results" in doc and isinstance(doc["results"], dict):
        doc = doc["results"]
    budget = ConvexityBudget.from_dict(doc["budget"]) if "budget" in doc else None
    witness = doc.get("witness", doc)
    if not witness or "functions" not in witness:
        raise UsageError(f"{path} holds no witness instance")
    return witness, budget


def cmd_verify(args) -> int:
    if args.replay is not None:
        witness, saved = _load_replay(args.replay)
        statement = args.statement or normalize_statement(witness["statement"])
        if args.p is not None and args.eps is not None:
            budget = budget_for(statement, args.eps, Exponents.from_p(args.p), **_alpha_opts(args))
        elif saved is not None:
            budget = saved
        else:
            raise UsageError("--replay without a saved budget needs --p and --eps")
        if budget.statement != statement:
            raise UsageError(f"witness is for {statement}, budget for {budget.statement}")
        report = verify_instance(statement, witness_functions(witness), budget.epsilon, budget)
        report.seed = args.seed
        params = {"statement": statement, "replay": str(args.replay), "p": budget.exponents.p,
                  "eps": budget.epsilon}
    else:
        if args.statement is None or args.p is None or args.eps is None:
            raise UsageError("verify needs --statement, --p and --eps (or --replay)")
        e = Exponents.from_p(args.p)
        opts = SearchOptions(seed=args.seed, restarts=args.restarts, max_evaluations=args.max_evals)
        report = adversarial_verify(
            args.statement, e, args.eps, args.atoms, opts, threads=args.threads,
            **_alpha_opts(args),
        )
        params = {"statement": args.statement, "p": args.p, "eps": args.eps,
                  "atoms": args.atoms, "restarts": args.restarts,
                  "max_evals": args.max_evals, **_alpha_params(args)}
    _emit(_json(envelope("verify", params, report.to_dict(), args.seed)), args.out)
    if report.status == PASS:
        return EXIT_OK
    if report.status == FAIL:
        return EXIT_COUNTEREXAMPLE
    print(f"lpconv: {report.instance_summary}", file=sys.stderr)
    return EXIT_INVALID


def cmd_table(args) -> int:
    rows = []
    for p in args.p_list:
        e = Exponents.from_p(p)
        for b in budget_table(args.statement, e, args.eps_list, **_alpha_opts(args)):
            alpha = next(v for k, v in b.chain if k.endswith("alpha"))
            rows.append([b.statement, repr(e.p), repr(b.epsilon), repr(b.delta), repr(alpha)])
    text = _csv(["statement", "p", "epsilon", "delta", "alpha"], rows)
    _emit(text, args.out)
    return EXIT_OK


def _search_opts(args) -> SearchOptions:
    return SearchOptions(seed=args.seed, restarts=args.restarts, max_evaluations=args.max_evals)


def cmd_slice_diameter(args) -> int:
    e = Exponents.from_p(args.p)
    if args.functional is not None:
        phi = function_from_dict(json.loads(args.functional.read_text(encoding="utf-8")))
    else:
        if args.atoms < 1:
            raise UsageError("--atoms must be >= 1")
        phi = MeasureSpace.uniform(args.atoms, probability=False).indicator(0)
    if args.delta <= 0:
        est_doc = {"quantity": "slice_diameter", "value": 0.0, "side": "lower",
                   "evaluations": 0, "seed": args.seed, "note": "empty slice (delta <= 0)",
                   "witness": None}
    else:
        est_doc = slice_diameter(SliceSpec(phi, args.delta, e), _search_opts(args),
                                 threads=args.threads).to_dict()
    params = {"p": args.p, "delta": args.delta, "atoms": phi.space.n_atoms,
              "restarts": args.restarts, "max_evals": args.max_evals}
    _emit(_json(envelope("slice-diameter", params, est_doc, args.seed)), args.out)
    return EXIT_OK


def cmd_modulus(args) -> int:
    e = Exponents.from_p(args.p)
    est = modulus_of_convexity(args.atoms, e, args.eps, _search_opts(args), threads=args.threads)
    if not math.isfinite(est.value):
        raise UsageError(est.note)
    params = {"p": args.p, "eps": args.eps, "atoms": args.atoms,
              "restarts": args.restarts, "max_evals": args.max_evals}
    _emit(_json(envelope("modulus", params, est.to_dict(), args.seed)), args.out)
    return EXIT_OK


COMMANDS = {
    "alpha": cmd_alpha,
    "delta": cmd_delta,
    "verify": cmd_verify,
    "table": cmd_table,
    "slice-diameter": cmd_slice_diameter,
    "modulus": cmd_modulus,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (LpConvError, UsageError, ValueError, KeyError, OSError) as exc:
        print(f"lpconv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
