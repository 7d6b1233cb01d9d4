"""Command-line front end.

Every subcommand prints a JSON summary on standard output.  With ``--out``
it also writes its result files and a ``manifest.json`` listing the inputs,
the seed, the tool version and a sha256 of each output.  Exit status is 0 on
success, 2 on invalid input and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .hyperbolic import FNPoint
from .io import atomic_write, csv_table, dumps, sha256_file
from .topology import CurveSystem
from .words import CurveClass, format_word, parse_word

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


# --- input validation -------------------------------------------------------------------

@dataclass
class ValidatedInput:
    kind: str  # "point" | "curves"
    value: object
    warnings: list[str] = field(default_factory=list)


def _check_genus(doc, errors, where="genus"):
    genus = doc.get("genus", 2)
    if not isinstance(genus, int) or isinstance(genus, bool):
        errors.append(f"{where}: genus must be an integer")
        return None
    if genus < 2:
        errors.append(f"{where}: genus g >= 2 is required, got {genus}")
        return None
    if genus != 2:
        errors.append(f"{where}: only genus 2 is implemented, got {genus}")
        return None
    return genus


def validate_input(doc, *, metric: FNPoint | None = None) -> ValidatedInput:
    """Schema-check a point or curve-system document and normalise it.

    Curve words are reduced (a warning is recorded when the stored word
    changes) and, when ``expected_intersections`` is present, the
    intersection matrix is recomputed at ``metric`` (the Bolza point by
    default) and compared entry by entry.

    Raises
    ------
    ValidationError
        With every problem found, one per line, each prefixed by its JSON path.
    """
    errors: list[str] = []
    warnings: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError("$: expected a JSON object")
    genus = _check_genus(doc, errors, "$.genus")
    if "curves" in doc:
        entries = doc["curves"]
        if not isinstance(entries, list) or not entries:
            errors.append("$.curves: expected a nonempty list")
            entries = []
        curves = []
        for k, e in enumerate(entries):
            where = f"$.curves[{k}]"
            if not isinstance(e, dict) or "word" not in e:
                errors.append(f"{where}: expected an object with a 'word'")
                continue
            cid = str(e.get("id") or f"c{k + 1}")
            try:
                raw = parse_word(e["word"], genus or 2)
                c = CurveClass(raw, id=cid, genus=genus or 2)
            except ValidationError as exc:
                errors.append(f"{where}.word: {exc}")
                continue
            if c.word != raw:
                warnings.append(f"{where}.word: normalised {format_word(raw)!r} to {format_word(c.word)!r}")
            curves.append(c)
        ids = [c.id for c in curves]
        for cid in sorted({i for i in ids if ids.count(i) > 1}):
            errors.append(f"$.curves: duplicate id {cid!r}")
        if errors or genus is None:
            raise ValidationError("\n".join(errors))
        C = CurveSystem(tuple(curves))
        expected = doc.get("expected_intersections")
        if expected is not None:
            E = np.asarray(expected)
            if E.shape != (len(C), len(C)):
                raise ValidationError(f"$.expected_intersections: expected a {len(C)}x{len(C)} matrix")
            from .bolza import bolza_point

            actual = C.with_intersections(metric or bolza_point()).intersection_matrix
            bad = [
                f"$.expected_intersections[{i}][{j}]: {C[i].id}/{C[j].id} expected {int(E[i, j])}, found {int(actual[i, j])}"
                for i in range(len(C))
                for j in range(i + 1, len(C))
                if int(E[i, j]) != int(actual[i, j])
            ]
            if bad:
                raise ValidationError("\n".join(bad))
            C = CurveSystem(C.curves, actual)
        return ValidatedInput("curves", C, warnings)
    if "lengths" in doc or "twists" in doc:
        for key in ("lengths", "twists"):
            v = doc.get(key)
            if not isinstance(v, list) or not all(isinstance(t, (int, float)) for t in v):
                errors.append(f"$.{key}: expected a list of numbers")
        if errors:
            raise ValidationError("\n".join(errors))
        try:
            return ValidatedInput("point", FNPoint.from_dict(doc), warnings)
        except ValidationError as exc:
            raise ValidationError(f"$: {exc}") from exc
    errors.append("$: expected a point (lengths, twists) or a curve system (curves)")
    raise ValidationError("\n".join(errors))


def load_document(path: str, kind: str):
    """Read and validate a JSON file; warnings go to standard error."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        res = validate_input(doc)
    except ValidationError as exc:
        raise ValidationError(f"{path}:\n{exc}") from exc
    if res.kind != kind:
        raise ValidationError(f"{path}: expected a {kind} document, found a {res.kind} document")
    for w in res.warnings:
        print(f"warning: {path}: {w}", file=sys.stderr)
    return res.value


# --- run bookkeeping ------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    inputs: dict
    seed: int
    tool_version: str = __version__
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "outputs": dict(sorted(self.outputs.items())),
        }


class _Run:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out) if getattr(args, "out", None) else None
        inputs = {}
        for key in ("point", "curves", "weights"):
            v = getattr(args, key, None)
            if v is not None:
                inputs[key] = v if v == "equal" or not Path(v).exists() else {"path": v, "sha256": sha256_file(v)}
        for key in ("tol", "tmax", "starts", "rays", "samples", "kind", "epsilon", "curve"):
            v = getattr(args, key, None)
            if v is not None:
                inputs[key] = v
        self.manifest = RunManifest(args.command, inputs, int(getattr(args, "seed", 0) or 0))

    def emit(self, name: str, text: str):
        if self.out is not None:
            self.manifest.outputs[name] = atomic_write(self.out / name, text)

    def finish(self, summary: dict):
        self.emit("result.json", dumps(summary))
        if self.out is not None:
            atomic_write(self.out / "manifest.json", dumps(self.manifest.to_dict()))
        sys.stdout.write(dumps(summary))


def _point(args, default=None) -> FNPoint:
    if getattr(args, "point", None):
        return load_document(args.point, "point")
    if default is not None:
        return default
    raise ValidationError("--point is required")


def _curves(args, default=None) -> CurveSystem:
    if getattr(args, "curves", None):
        return load_document(args.curves, "curves")
    if default is not None:
        return default
    raise ValidationError("--curves is required")


def _weights(args, C: CurveSystem):
    from .minima import LengthFunctional

    spec = getattr(args, "weights", "equal") or "equal"
    if spec == "equal":
        return LengthFunctional.equal(C)
    if not Path(spec).exists() and "," in spec or spec.replace(".", "", 1).isdigit():
        w = spec.split(",")
    else:
        try:
            doc = json.loads(Path(spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"--weights: {exc}") from exc
        w = doc.get("weights", doc) if isinstance(doc, dict) else doc
    if isinstance(w, dict):
        try:
            w = [w[c.id] for c in C]
        except KeyError as exc:
            raise ValidationError(f"--weights: no weight for curve {exc}") from exc
    try:
        w = tuple(float(v) for v in w)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"--weights: {exc}") from exc
    if len(w) != len(C):
        raise ValidationError(f"--weights: expected {len(C)} weights, got {len(w)}")
    if not all(np.isfinite(v) and v > 0 for v in w):
        raise ValidationError("--weights: weights must be positive and finite")
    return LengthFunctional(C, w)


# --- subcommands -----------------------------------------------------------------------------

def cmd_bolza(args, run: _Run):
    from .bolza import BOLZA_SPECTRUM, bolza_preset, six_curve_critical_point
    from .hyperbolic import lengths_of

    p, C = bolza_preset()
    summary = {
        "point": p.to_dict(),
        "curves": C.to_dict(),
        "systole": float(lengths_of(C.words[:1], p.vector)[0]),
        "spectrum": [{"length": L, "multiplicity": m} for L, m in BOLZA_SPECTRUM],
        "six_curve_critical_point": six_curve_critical_point().to_dict(),
    }
    run.emit("bolza_point.json", dumps(p.to_dict()))
    run.emit("six_curves.json", dumps(C.to_dict()))
    run.finish(summary)


def cmd_lengths(args, run: _Run):
    from .hyperbolic import geodesic_length

    x, C = _point(args), _curves(args)
    reports = [geodesic_length(c, x) for c in C]
    rows = [(c.id, format_word(c.word), r.length, float(np.real(r.trace))) for c, r in zip(C, reports)]
    run.emit("lengths.csv", csv_table(["id", "word", "length", "trace"], rows))
    run.finish({"point": x.to_dict(), "lengths": [{"id": a, "word": b, "length": c, "trace": d} for a, b, c, d in rows]})


def cmd_systoles(args, run: _Run):
    from .spectrum import systoles

    x = _point(args)
    S = systoles(x, args.tol or 1e-7)
    run.finish(
        {
            "point": x.to_dict(),
            "systole": S.value,
            "curves": S.curves.to_dict()["curves"],
            "intersections": None if S.curves.intersection_matrix is None else S.curves.intersection_matrix.tolist(),
            "near_misses": [list(m) if isinstance(m, tuple) else m for m in S.near_misses],
        }
    )


def cmd_minimize(args, run: _Run):
    from .bolza import bolza_point
    from .estimators import LengthMinimizer

    C = _curves(args)
    F = _weights(args, C)
    x0 = _point(args, bolza_point())
    rng = np.random.default_rng(args.seed)
    starts = [x0.vector]
    while len(starts) < max(1, args.starts):
        v = x0.vector + rng.normal(scale=0.25, size=x0.vector.shape)
        n = 3 * x0.genus - 3
        v[:n] = np.abs(v[:n]) + 0.1
        starts.append(v)
    est = LengthMinimizer(C, "equal" if args.weights in (None, "equal") else list(F.weights), tol=args.tol or 1e-7)
    est.fit(np.array(starts))
    rows = [list(v) + [val] for v, val in zip(est.minimizers_, est.values_)]
    run.emit("minimizers.csv", csv_table([f"x{k + 1}" for k in range(len(x0.vector))] + ["value"], rows))
    run.finish(
        {
            "minimizer": est.minimizer_.to_dict(),
            "value": est.value_,
            "spread": est.spread_,
            "agree_within_1e-5": bool(est.spread_ < 1e-5),
            "converged": [bool(c) for c in est.converged_],
            "starts": len(starts),
        }
    )


def cmd_certify(args, run: _Run):
    from .minima import certify_critical_point

    x = _point(args)
    cert = certify_critical_point(x, args.tol or 1e-7)
    run.finish(cert.to_dict())


def cmd_polytope(args, run: _Run):
    from .minima import GradientFrame
    from .polytopes import build_face_lattice, check_duality, dual_fan
    from .spectrum import systoles

    x = _point(args)
    C = _curves(args, None) if args.curves else systoles(x).curves
    lattice = build_face_lattice(GradientFrame.at(C, x))
    fan = dual_fan(lattice)
    names = C.ids
    run.emit("lattice.dot", lattice.to_dot(names))
    summary = {
        "curves": names,
        "dimension": lattice.dimension,
        "f_vector": [len(lattice.by_dimension(d)) for d in range(lattice.dimension + 1)],
        "facets": [[names[i] for i in f.labels] for f in lattice.facets],
        "dual": bool(check_duality(lattice, fan)),
    }
    run.emit("lattice.json", dumps(lattice.to_dict()))
    run.finish(summary)


def cmd_horizon(args, run: _Run):
    from .bolza import six_curve_critical_point
    from .geodesics import CurveRegistry, surface_geometry
    from .topology import horizon_subcomplex

    C = _curves(args)
    x = _point(args, six_curve_critical_point())
    registry = CurveRegistry(surface_geometry(x))
    H = horizon_subcomplex(C, x, registry)
    summary = {"dimension": H.dimension, "vertices": len(H.vertices), "simplices": len(H.simplices)}
    if args.samples:
        from .flows import numeric_horizon

        nh = numeric_horizon(C, args.samples, args.seed, x0=x, registry=registry, t_max=args.tmax or 40.0)
        V = set(H.vertices)
        summary["numeric"] = {
            "profiles": len(nh.observations),
            "pinched": sum(o.terminal == "pinched" for o in nh.observations),
            "incomplete": len(nh.incomplete),
            "pinch_sets": sorted(list(s) for s in nh.pinch_sets),
            "contained": all(s in V for s in nh.pinch_sets),
        }
    run.emit("horizon.json", dumps(H.to_dict()))
    run.finish(summary)


def cmd_flow(args, run: _Run):
    from .flows import integrate_descent, petal_trace, thurston_flow

    x = _point(args)
    tmax = args.tmax or 20.0
    if args.kind == "thurston":
        trace = thurston_flow(x, args.epsilon, tmax)
    elif args.kind == "petal":
        C = _curves(args)
        c = next((c for c in C if c.id == args.curve), None)
        if c is None:
            raise ValidationError(f"--curve {args.curve!r} is not in the curve file")
        trace = petal_trace(x, c, C, tmax)
    else:
        C = _curves(args)
        trace = integrate_descent(x, _weights(args, C), tmax)
    run.emit("trace.csv", trace.to_csv())
    f = [s.fsys for s in trace.samples]
    run.finish(
        {
            "kind": args.kind,
            "terminal": trace.terminal,
            "pinched": list(trace.pinched),
            "samples": len(trace.samples),
            "t_end": trace.samples[-1].t,
            "fsys_start": f[0],
            "fsys_end": f[-1],
            "end": trace.end.to_dict(),
            "violations": [[t, msg] for t, msg in trace.violations],
        }
    )


def cmd_fiber(args, run: _Run):
    from .flows import fiber_sample
    from .spectrum import systoles

    p = _point(args)
    C = _curves(args, None) if args.curves else systoles(p).curves
    fs = fiber_sample(p, C, args.rays, args.seed, t_max=args.tmax or 5.0)
    run.finish(
        {
            "rays": len(fs.rays),
            "fsys_drop": fs.fsys_drop,
            "hit_spine_again": fs.hit_spine_again,
            "returns": [r.terminal for r in fs.returns],
        }
    )


COMMANDS = {
    "bolza": cmd_bolza,
    "lengths": cmd_lengths,
    "systoles": cmd_systoles,
    "minimize": cmd_minimize,
    "certify": cmd_certify,
    "polytope": cmd_polytope,
    "horizon": cmd_horizon,
    "flow": cmd_flow,
    "fiber": cmd_fiber,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--genus", type=int, default=2)
    common.add_argument("--point")
    common.add_argument("--curves")
    common.add_argument("--weights", default="equal")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float)
    common.add_argument("--tmax", type=float)
    common.add_argument("--out")
    parser = argparse.ArgumentParser(prog="spinelab", description="Systole critical points and spines in genus two.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bolza", parents=[common], help="dump the Bolza preset")
    sub.add_parser("lengths", parents=[common], help="geodesic lengths of curves at a point")
    sub.add_parser("systoles", parents=[common], help="systoles and their intersections")
    m = sub.add_parser("minimize", parents=[common], help="minimise a weighted length functional")
    m.add_argument("--starts", type=int, default=1)
    sub.add_parser("certify", parents=[common], help="certify a critical point of the systole")
    sub.add_parser("polytope", parents=[common], help="face lattice of the gradient polytope")
    h = sub.add_parser("horizon", parents=[common], help="horizon subcomplex of a filling system")
    h.add_argument("--samples", type=int, default=0)
    f = sub.add_parser("flow", parents=[common], help="integrate a flow and export its trace")
    f.add_argument("--kind", choices=("descent", "petal", "thurston"), default="descent")
    f.add_argument("--epsilon", type=float, default=0.05)
    f.add_argument("--curve")
    fb = sub.add_parser("fiber", parents=[common], help="probe the fibre over a critical point")
    fb.add_argument("--rays", type=int, default=4)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.genus != 2:
            raise ValidationError(
                "genus g >= 2 is required" if args.genus < 2 else "only genus 2 is implemented"
            )
        COMMANDS[args.command](args, _Run(args))
    except (ValidationError, NotImplementedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
