import argparse
import csv
import io
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from okamoto.config import SETTINGS_DIR
from okamoto.errors import OkamotoError, ValidationError, require

logger = logging.getLogger(__name__)

GRAPH_MAX_DEPTH = 12


def _real(text: str) -> float:
    """Accept decimals and fractions such as 1/3."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}")


def _fmt(value: Any) -> Any:
    return "%.17g" % value if isinstance(value, float) else value


def _csv_text(rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def _json_text(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    elif isinstance(payload, list):
        payload = [p.model_dump(mode="json") if isinstance(p, BaseModel) else p for p in payload]
    return json.dumps(payload, indent=2) + "\n"


def _emit(text: str, out: Optional[str]):
    if not out:
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise OkamotoError(f"cannot write output to {path}: {e}") from e
    logger.info(f"wrote {path}")


def _experiment(name: str, args, **overrides):
    from okamoto.experiments import get_experiment_by_name

    return get_experiment_by_name(name, settings_dir=args.settings_dir, overrides=overrides)


def render_graph_csv(k: int, a: float, n: int, out: Optional[str] = None) -> str:
    """Rows (j/3^n, M_{k,a}(j/3^n)) for j = 0..3^n."""
    from okamoto.evaluator import grid_values

    require(1 <= n <= GRAPH_MAX_DEPTH, "n_out_of_range", f"graph depth must lie in [1, {GRAPH_MAX_DEPTH}], got {n}")
    values = grid_values(k, a, n)
    size = 3 ** n
    text = _csv_text((j / size, float(v)) for j, v in enumerate(values))
    if out:
        _emit(text, out)
    return text


def run_eval(args):
    from okamoto.evaluator import DEFAULT_TOL, eval_via_FE, evaluate
    from okamoto.ternary import parse_source

    x = parse_source(args.x)
    if args.n:
        result = eval_via_FE(args.k, args.a, x, args.n)
    else:
        result = evaluate(args.k, args.a, x, tol=args.tol or DEFAULT_TOL)
    if args.format == "csv":
        _emit(_csv_text([("value", "err_bound", "terms", "exact"),
                         (result.value, result.err_bound, result.terms, int(result.exact))]), args.out)
    else:
        _emit(_json_text(result), args.out)


def run_graph(args):
    text = render_graph_csv(args.k, args.a, args.n or 8)
    _emit(text, args.out)


def run_classify(args):
    from okamoto.classifier import DEFAULT_HORIZON, classify, verdict_text
    from okamoto.ternary import parse_source

    x = parse_source(args.x)
    point = classify(args.k, args.a, x, horizon=args.horizon or DEFAULT_HORIZON)
    payload = point.model_dump(mode="json")
    payload["x"] = x.to_text()
    payload["text"] = verdict_text(point)
    _emit(_json_text(payload), args.out)


def run_qpoly(args):
    from okamoto.hermite_q import q_poly, q_roots, thresholds

    rows = []
    for k in range(1, args.k + 1):
        q = q_poly(k)
        row = {"k": k, "coeffs": list(q.coeffs), "text": q.to_text(), "roots": q_roots(k)}
        if args.a is not None:
            row["scaled"] = list(thresholds(k, args.a).scaled)
        rows.append(row)
    if args.format == "csv":
        _emit(_csv_text([(r["k"], i + 1, root) for r in rows for i, root in enumerate(r.get("scaled", r["roots"]))]),
              args.out)
    else:
        _emit(_json_text(rows), args.out)


def run_consts(args):
    from okamoto.classifier import special_constants

    _emit(_json_text(special_constants()), args.out)


def run_boxdim(args):
    report = _experiment("boxdim", args, k=args.k, a=args.a, n_min=args.n, n_max=args.nmax, m=args.m).run()
    if args.format == "csv":
        _emit(_csv_text((n, c, math.log(c) / math.log(3.0)) for n, c in zip(report.scales, report.counts)), args.out)
    else:
        _emit(_json_text(report), args.out)


def run_markov(args):
    from okamoto.dimension import markov_model

    payload = {"model": markov_model(args.a, args.p).model_dump(mode="json")}
    if args.cycles:
        stats = _experiment("cycles", args, a=args.a, p=args.p, cycles=args.cycles, seed=args.seed).run()
        payload["cycles"] = stats.model_dump(mode="json")
    _emit(_json_text(payload), args.out)


def run_lil(args):
    report = _experiment("lil", args, a=args.a, p=args.p, steps=args.steps, trials=args.trials, seed=args.seed).run()
    _emit(_json_text(report), args.out)


def run_curve(args):
    rows = _experiment("curve", args, points=args.points).run()
    if args.format == "json":
        _emit(_json_text(rows), args.out)
    else:
        _emit(_csv_text((r.a, r.h_tilde, r.h_upper) for r in rows), args.out)


def _common(parser: argparse.ArgumentParser, *names: str):
    options = {
        "k": dict(type=int, help="derivative order in a"),
        "a": dict(type=_real, help="parameter a, decimal or fraction"),
        "x": dict(type=str, help="point as F:digits, P:pre|period, R:p/q or G:family:params"),
        "n": dict(type=int, help="depth / smallest scale"),
        "m": dict(type=int, help="subgrid depth"),
        "p": dict(type=_real, help="Markov persistence parameter"),
        "tol": dict(type=float, help="absolute tolerance"),
        "seed": dict(type=int, help="random seed"),
        "trials": dict(type=int, help="independent trials"),
        "steps": dict(type=int, help="steps per trial"),
        "nmax": dict(type=int, help="largest scale"),
        "horizon": dict(type=int, help="digits examined for generated points"),
        "cycles": dict(type=int, help="number of simulated cycles"),
        "points": dict(type=int, help="grid points"),
    }
    for name in names:
        parser.add_argument(f"--{name}", **options[name])
    parser.add_argument("--format", type=str, choices=["csv", "json"], default=None, help="output format")
    parser.add_argument("--out", type=str, default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="okamoto", description="Okamoto's function and its parameter derivatives")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--settings-dir", dest="settings_dir", type=str, nargs="?", const=str(SETTINGS_DIR), default=None,
                        help=f"persist experiment settings as JSON (default folder {SETTINGS_DIR})")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    eval_parser = subparsers.add_parser("eval", help="Evaluate F_a (k=0) or M_{k,a} at a point")
    _common(eval_parser, "k", "a", "x", "n", "tol")
    eval_parser.set_defaults(func=run_eval, k=0, required=("a", "x"))

    graph_parser = subparsers.add_parser("graph", help="Sample M_{k,a} on the 3^-n grid as CSV")
    _common(graph_parser, "k", "a", "n")
    graph_parser.set_defaults(func=run_graph, k=0, required=("a",))

    classify_parser = subparsers.add_parser("classify", help="Classify the derivative of M_{k,a} at a point")
    _common(classify_parser, "k", "a", "x", "horizon")
    classify_parser.set_defaults(func=run_classify, k=1, required=("a", "x"))

    qpoly_parser = subparsers.add_parser("qpoly", help="Print q_1..q_k with roots and scaled thresholds")
    _common(qpoly_parser, "k", "a")
    qpoly_parser.set_defaults(func=run_qpoly, k=4, required=())

    consts_parser = subparsers.add_parser("consts", help="Print a0, a_hat and the inverse golden ratio")
    _common(consts_parser)
    consts_parser.set_defaults(func=run_consts, required=())

    boxdim_parser = subparsers.add_parser("boxdim", help="Fit the box-counting dimension of the graph")
    _common(boxdim_parser, "k", "a", "n", "nmax", "m")
    boxdim_parser.set_defaults(func=run_boxdim, required=())

    markov_parser = subparsers.add_parser("markov", help="Markov model summary and cycle statistics")
    _common(markov_parser, "a", "p", "cycles", "seed")
    markov_parser.set_defaults(func=run_markov, required=("a", "p"))

    lil_parser = subparsers.add_parser("lil", help="Simulate the iterated-logarithm statistic")
    _common(lil_parser, "a", "p", "steps", "trials", "seed")
    lil_parser.set_defaults(func=run_lil, required=())

    curve_parser = subparsers.add_parser("curve", help="Lower and upper dimension curves on [1/8, 3/8]")
    _common(curve_parser, "points")
    curve_parser.set_defaults(func=run_curve, required=())

    return parser


def dispatch(args) -> int:
    """Run the selected subcommand; 0 on success, 2 on invalid input, 1 otherwise."""
    try:
        for name in args.required:
            require(getattr(args, name) is not None, "missing_argument", f"--{name} is required for {args.command}")
        args.func(args)
    except ValidationError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        return 2
    except PydanticValidationError as e:
        first = e.errors()[0]
        sys.stderr.write(json.dumps({"error": "invalid_value", "message": first["msg"]}) + "\n")
        return 2
    except OkamotoError as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1
    except Exception as e:
        logger.exception(f"internal failure in '{args.command}'")
        sys.stderr.write(json.dumps({"error": "internal", "message": str(e)}) + "\n")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    sys.exit(dispatch(args))
