"""Command-line front end: ``beta <command> ...``.

Exit codes: 0 success, 1 diagnostics or malformed input, 2 usage error,
3 internal or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import logic, machine, omega
from .dsl import DiagnosticError, execute, format_program, parse, resolve
from .errors import BetaError, CapacityError, DomainError, NumericError, ValidationError
from .logic import SCHEMA

EXIT_OK, EXIT_DIAG, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
ORTHOMODULAR_TOL = 1e-9


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.add_argument("--out", type=Path, help="also write the JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beta", description="Event-state machine toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a .beta program")
    run.add_argument("path", type=Path)
    run.add_argument("--shots", type=_positive_int)
    run.add_argument("--seed", type=_seed)
    run.add_argument("--epsilon", type=_positive_float)
    run.add_argument("--max-steps", type=_positive_int)
    run.add_argument("--mode", choices=machine.MODES)
    _output_flags(run)

    fmt = sub.add_parser("fmt", help="print a .beta program in canonical form")
    fmt.add_argument("path", type=Path)
    fmt.add_argument("--check", action="store_true", help="exit 1 if the file is not canonical")

    om = sub.add_parser("omega", help="quasi-periodicity toolkit")
    osub = om.add_subparsers(dest="task", required=True)
    _output_flags(osub.add_parser("classify", help="classify all binary 2x2 matrices"))
    for name, helptext in (("fib", "Fibonacci number via the closed form"),
                           ("gap", "distance of the growth ratio from the golden ratio"),
                           ("word", "Fibonacci word after k rewritings")):
        p = osub.add_parser(name, help=helptext)
        p.add_argument("n", type=int)
        _output_flags(p)
    eu = osub.add_parser("euclid", help="Euclidean algorithm trace")
    eu.add_argument("p", type=int)
    eu.add_argument("q", type=int)
    _output_flags(eu)
    ca = osub.add_parser("ca", help="rule-110 linear-map impossibility check")
    ca.add_argument("--arith", choices=("integer", "mod2"), default="integer")
    ca.add_argument("--rule", type=int, default=110)
    _output_flags(ca)
    apd = osub.add_parser("almost-period", help="search an almost period of a cosine sum")
    apd.add_argument("--freq", type=float, nargs="+", default=[1.0, (1 + math.sqrt(5)) / 2])
    apd.add_argument("--epsilon", type=_positive_float, default=0.5)
    apd.add_argument("--start", type=float, default=0.0)
    apd.add_argument("--stop", type=float, default=100.0)
    apd.add_argument("--step", type=_positive_float, default=0.01)
    _output_flags(apd)

    lat = sub.add_parser("lattice", help="distributivity witness and orthomodular checks")
    lat.add_argument("--dim", type=int, default=2)
    lat.add_argument("--trials", type=int, default=1000)
    lat.add_argument("--seed", type=_seed, default=0)
    _output_flags(lat)

    hyp = sub.add_parser("hypothesize", help="recover an operator from a trajectory")
    hyp.add_argument("path", type=Path)
    hyp.add_argument("--family", default="binary2",
                     help="binary2, binary3 or a JSON file holding a list of matrices")
    hyp.add_argument("--workers", type=_positive_int, default=1)
    _output_flags(hyp)
    return ap


def _document(kind: str, body: dict) -> dict:
    return {"schema": SCHEMA, "kind": kind, **body}


def _emit(args, doc: dict, text: str) -> None:
    blob = json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if getattr(args, "out", None):
        args.out.write_text(blob, encoding="utf-8")
    sys.stdout.write(blob if getattr(args, "json", False) else text.rstrip("\n") + "\n")


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


# -- commands ------------------------------------------------------------------


def cmd_run(args) -> int:
    bound = resolve(parse(_read(args.path)))
    doc = execute(bound, shots=args.shots, seed=args.seed, epsilon=args.epsilon,
                  max_steps=args.max_steps, mode=args.mode)
    lines = [f"system: {bound.system.total_dim} standard states, "
             f"{len(bound.program.combined)} combined"]
    for step in doc["steps"]:
        lines.append(f"t={step['t']:<4d} entropy={step['entropy']:.6g} bits")
    for pr in doc["prints"]:
        lines.append(f"[t={pr['t']} {pr['rule']}#{pr['branch']}] {pr['text']}")
    if doc["converged"]:
        lines.append(f"converged at T={doc['T']}, decided class {doc['decided_class']}")
    else:
        lines.append(f"not converged after {doc['max_steps']} steps")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_fmt(args) -> int:
    text = _read(args.path)
    canon = format_program(parse(text))
    if args.check:
        if canon != text:
            sys.stderr.write(f"{args.path}: not in canonical form\n")
            return EXIT_DIAG
        return EXIT_OK
    sys.stdout.write(canon)
    return EXIT_OK


def cmd_omega(args) -> int:
    task = args.task
    if task == "classify":
        body = omega.classification_report()
        lines = [f"{v['matrix']}  disc={v['discriminant']:>3}  {'OMEGA' if v['in_omega'] else '-'}"
                 for v in body["verdicts"]]
        lines.append(f"{len(body['in_omega'])} of {body['count']} in class Omega")
        lines.extend(f"note: {n}" for n in body["notes"])
    elif task == "fib":
        value = omega.fib_closed_form(args.n)
        body = {"operation": "fib", "n": args.n, "value": value,
                "iterated": omega.fib_iterate(args.n)[0]}
        lines = [f"phi({args.n}) = {value}"]
    elif task == "gap":
        gap = omega.golden_ratio_gap(args.n)
        body = {"operation": "gap", "n": args.n, "gap": gap}
        lines = [f"|F(n+1)/F(n) - tau| at n={args.n}: {gap:.6e}"]
    elif task == "word":
        body = omega.fib_word_report(args.n)
        lines = [body["word"], f"length {body['length']}"]
    elif task == "euclid":
        body = {"operation": "euclid", "p": args.p, "q": args.q,
                **omega.euclid_trace(args.p, args.q).to_dict()}
        lines = [f"quotients {tuple(body['quotients'])}", f"gcd {body['gcd']} in {body['steps']} steps"]
    elif task == "ca":
        body = omega.ca_linear_impossibility(args.arith, args.rule).to_dict()
        if args.rule == 110:
            body["prose_candidate"] = {
                "matrix": [list(r) for r in omega.PROSE_CANDIDATE],
                "failures": omega.evaluate_candidate(omega.PROSE_CANDIDATE, args.arith, args.rule),
            }
        lines = [f"rule {args.rule}, {args.arith} arithmetic: "
                 f"{len(body['matches'])} of {body['candidates_checked']} linear maps reproduce the table"]
    else:
        grid = omega.Grid(args.start, args.stop, args.step)
        body = omega.almost_period_search(tuple(args.freq), args.epsilon, grid).to_dict()
        lines = [f"shift {body['shift']:.10g}, max deviation {body['max_deviation']:.3e}, "
                 f"{'found' if body['found'] else 'not found'} (epsilon {args.epsilon})"]
    _emit(args, _document("omega", body), "\n".join(lines))
    return EXIT_OK


def cmd_lattice(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    witness = logic.distributivity_witness(args.dim)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        p, q = logic.random_ordered_pair(rng, max_dim=args.dim)
        worst = max(worst, logic.orthomodular_defect(p, q))
    passed = worst <= ORTHOMODULAR_TOL
    body = {
        "dim": args.dim,
        "seed": args.seed,
        "witness": witness.to_dict(),
        "orthomodular": {"trials": args.trials, "max_defect": worst,
                         "tolerance": ORTHOMODULAR_TOL, "passed": passed},
    }
    lines = [f"distributivity fails at dim {args.dim}: rank r^(pvq) = {witness.lhs_rank}, "
             f"rank (r^p)v(r^q) = {witness.rhs_rank}",
             f"orthomodular law: {args.trials} random pairs, max defect {worst:.2e} "
             f"({'pass' if passed else 'FAIL'})"]
    _emit(args, _document("lattice", body), "\n".join(lines))
    return EXIT_OK if passed else EXIT_INTERNAL


class MalformedInput(Exception):
    pass


def _load_json(path: Path):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON: {exc}") from None


def _int_vectors(data, what: str):
    if not isinstance(data, list):
        raise MalformedInput(f"{what} must be a JSON list")
    for v in data:
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                              for x in v):
            raise MalformedInput(f"{what} entries must be lists of numbers")
    return data


def cmd_hypothesize(args) -> int:
    data = _load_json(args.path)
    if isinstance(data, dict):
        data = data.get("trajectory")
    traj = _int_vectors(data, "trajectory")
    if len(traj) < 2:
        raise UsageError("trajectory needs at least two vectors")
    family = args.family
    if family not in ("binary2", "binary3"):
        raw = _load_json(Path(family))
        if not isinstance(raw, list) or not raw:
            raise MalformedInput("family file must be a non-empty list of matrices")
        family = [np.asarray(_int_vectors(m, "matrix")) for m in raw]
    matches = machine.hypothesis_search(traj, family, workers=args.workers)
    body = {"trajectory": traj, "family": args.family if isinstance(family, str) else "file",
            "matches": [m.to_dict() for m in matches]}
    lines = [f"{len(matches)} matching operator(s)"]
    lines.extend(f"{m.operator.tolist()}  {'exact' if m.exact else 'approximate'}" for m in matches)
    _emit(args, _document("hypothesis", body), "\n".join(lines))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "fmt": cmd_fmt, "omega": cmd_omega, "lattice": cmd_lattice,
            "hypothesize": cmd_hypothesize}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    path = getattr(args, "path", None)
    try:
        return COMMANDS[args.command](args)
    except DiagnosticError as exc:
        for d in exc.diagnostics:
            sys.stderr.write(d.render(str(path) if path else None) + "\n")
        return EXIT_DIAG
    except MalformedInput as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DIAG
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (DomainError, CapacityError, ValidationError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (NumericError, BetaError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
