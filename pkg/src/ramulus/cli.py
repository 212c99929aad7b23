"""Command-line front end.

Subcommands:

  solve     optimal network for an atomic boundary (measure JSON in)
  flatnorm  flat norm of an atomic measure
  dyadic    dyadic transport report for a measure in the unit cube
  perturb   ball perturbation of a network (chain + points JSON in)
  classify  four-point local topology classification
  stability solve a family of boundaries and track value convergence
  validate  check a network JSON against the chain invariants

All outputs are byte-stable for a fixed input: JSON is emitted with sorted
keys and shortest-round-trip floats, CSV rows in deterministic order.
Domain and precondition failures exit with code 2 and a machine-readable
JSON object on stderr; capacity failures exit with code 3.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import experiments, svg
from .chains import PolyChain
from .errors import CapacityError, DomainError, RamulusError
from .local_branch import FourPointInstance, classify_four_point
from .measures import AtomicMeasure, Boundary, flat_norm_0
from .solver import solve_gilbert

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_CAPACITY = 3


@dataclass
class RunConfig:
    command: str
    alpha: float = 0.5
    input_path: str = "-"
    output_path: str | None = None
    svg_path: str | None = None
    seed: int = 0
    atom_cap: int = 8
    depth: int = 4
    k: int = 1
    n: int = 1
    gap_tol: float = 1e-6


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ramulus", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alpha=True):
        sp.add_argument("--input", default="-", help="input JSON path ('-' for stdin)")
        sp.add_argument("--output", default=None, help="output path (default: stdout)")
        sp.add_argument("--seed", type=int, default=0, help="reserved for reproducibility")
        if alpha:
            sp.add_argument("--alpha", type=float, required=True)

    sp = sub.add_parser("solve", help="solve the Gilbert problem for a boundary")
    common(sp)
    sp.add_argument("--atom-cap", type=int, default=8)
    sp.add_argument("--gap-tol", type=float, default=1e-6)
    sp.add_argument("--svg", default=None, help="write an SVG drawing (d = 2)")

    sp = sub.add_parser("flatnorm", help="flat norm of an atomic measure")
    common(sp, alpha=False)

    sp = sub.add_parser("dyadic", help="dyadic transport of a unit-cube measure")
    common(sp)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--svg", default=None)

    sp = sub.add_parser("perturb", help="ball perturbation of a network")
    common(sp, alpha=False)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)

    sp = sub.add_parser("classify", help="four-point local topology classification")
    common(sp)
    sp.add_argument("--svg", default=None, help="write a candidate contact sheet")

    sp = sub.add_parser("stability", help="value convergence along a boundary family")
    common(sp)
    sp.add_argument("--atom-cap", type=int, default=8)

    sp = sub.add_parser("validate", help="validate a network JSON")
    common(sp, alpha=False)
    return p


def _read_input(path: str) -> dict:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read input: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(path: str | None, obj) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True) + "\n")


def _emit_csv(path: str | None, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_text(path, buf.getvalue())


def _load_boundary(obj) -> Boundary:
    return Boundary(AtomicMeasure.from_obj(obj))


def _cmd_solve(args) -> int:
    b = _load_boundary(_read_input(args.input))
    result = solve_gilbert(b, args.alpha, atom_cap=args.atom_cap, gap_tol=args.gap_tol)
    obj = result.to_obj()
    obj["ambiguous"] = bool(len(result.ranking) > 1 and result.gap <= args.gap_tol)
    _emit_json(args.output, obj)
    if args.svg:
        _write_text(args.svg, svg.render_chain(result.best, args.alpha, b.measure))
    return EXIT_OK


def _cmd_flatnorm(args) -> int:
    m = AtomicMeasure.from_obj(_read_input(args.input))
    _emit_json(args.output, {"flat_norm": flat_norm_0(m), "mass": m.mass()})
    return EXIT_OK


def _cmd_dyadic(args) -> int:
    m = AtomicMeasure.from_obj(_read_input(args.input))
    report = experiments.dyadic_transport(m, args.alpha, args.depth)
    if args.output and args.output.endswith(".csv"):
        _emit_csv(
            args.output,
            ["n", "mass", "alpha_mass", "bound"],
            [(n, m_, am, bd) for n, m_, am, bd in report.per_generation],
        )
    else:
        _emit_json(args.output, report.to_obj())
    if args.svg:
        _write_text(args.svg, svg.render_chain(report.chain, args.alpha))
    return EXIT_OK


def _cmd_perturb(args) -> int:
    obj = _read_input(args.input)
    try:
        chain = PolyChain.from_obj(obj["chain"])
        points = [np.asarray(p, dtype=float) for p in obj["points"]]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"perturb input must hold 'chain' and 'points': {exc}") from exc
    report = experiments.perturb_boundary(chain, points, args.k, args.n)
    _emit_json(args.output, report.to_obj())
    return EXIT_OK


def _cmd_classify(args) -> int:
    obj = _read_input(args.input)
    try:
        inst = FourPointInstance(
            A=np.asarray(obj["A"], dtype=float),
            B=np.asarray(obj["B"], dtype=float),
            C=np.asarray(obj["C"], dtype=float),
            D=np.asarray(obj["D"], dtype=float),
            theta=float(obj["theta"]),
            k=int(obj["k"]),
            alpha=args.alpha,
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"classify input must hold A, B, C, D, theta, k: {exc}") from exc
    result = classify_four_point(inst)
    _emit_json(
        args.output,
        {"label": result.label, "ranking": [[c, v] for c, v in result.ranking]},
    )
    if args.svg:
        panels = [(case, result.networks[case], value) for case, value in result.ranking]
        _write_text(args.svg, svg.render_contact_sheet(panels, args.alpha))
    return EXIT_OK


def _cmd_stability(args) -> int:
    obj = _read_input(args.input)
    try:
        base = _load_boundary(obj["base"])
        family = [_load_boundary(o) for o in obj["family"]]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"stability input must hold 'base' and 'family': {exc}") from exc
    report = experiments.stability_experiment(base, family, args.alpha, atom_cap=args.atom_cap)
    if args.output and args.output.endswith(".csv"):
        _emit_csv(
            args.output,
            ["index", "flat_distance", "value"],
            [(e.index, e.flat_distance, e.value) for e in report.entries],
        )
    else:
        _emit_json(args.output, report.to_obj())
    return EXIT_OK


def _cmd_validate(args) -> int:
    obj = _read_input(args.input)
    chain = PolyChain.from_obj(obj)
    chain.validate()
    bdry = chain.boundary()
    _emit_json(
        args.output,
        {
            "boundary_atoms": len(bdry.atoms),
            "edges": len(chain.edges),
            "is_forest": chain.is_tree(),
            "valid": True,
            "vertices": len(chain.vertices),
        },
    )
    return EXIT_OK


_HANDLERS = {
    "solve": _cmd_solve,
    "flatnorm": _cmd_flatnorm,
    "dyadic": _cmd_dyadic,
    "perturb": _cmd_perturb,
    "classify": _cmd_classify,
    "stability": _cmd_stability,
    "validate": _cmd_validate,
}


def run(config: RunConfig) -> int:
    """Programmatic entry point mirroring the CLI contract."""
    argv = [config.command, "--input", config.input_path]
    if config.output_path:
        argv += ["--output", config.output_path]
    if config.command in ("solve", "dyadic", "classify", "stability"):
        argv += ["--alpha", str(config.alpha)]
    if config.command == "solve":
        argv += ["--atom-cap", str(config.atom_cap), "--gap-tol", str(config.gap_tol)]
    if config.command == "dyadic":
        argv += ["--depth", str(config.depth)]
    if config.command == "perturb":
        argv += ["--k", str(config.k), "--n", str(config.n)]
    if config.command == "stability":
        argv += ["--atom-cap", str(config.atom_cap)]
    if config.svg_path and config.command in ("solve", "dyadic", "classify"):
        argv += ["--svg", config.svg_path]
    return main(argv)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CapacityError as exc:
        sys.stderr.write(json.dumps({"error": {"message": str(exc), "type": "capacity"}}) + "\n")
        return EXIT_CAPACITY
    except (DomainError, RamulusError) as exc:
        sys.stderr.write(json.dumps({"error": {"message": str(exc), "type": "domain"}}) + "\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
