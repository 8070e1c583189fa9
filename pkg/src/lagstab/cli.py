"""Command-line front end.

Every subcommand writes one JSON document (stdout, or ``--out``) that carries
a run manifest with the seed.  Floats are written with 17 significant digits
so identical runs give byte-identical output.  Human-readable notes go to
stderr.

Exit codes: 0 success, 1 usage or input error, 2 singular flow, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import curves, flow, mirror, monodromy, stability, surgery
from .torus import graded_class, phase_and_slope

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_TIMEOUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for singular flows
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- serialisation -----------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    # keep the value a float when read back
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits (non-finite values as strings)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _manifest(args, inputs=(), outputs=()) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {
        "command": args.command,
        "inputs": [str(p) for p in inputs],
        "flags": {k: (list(v) if isinstance(v, tuple) else v) for k, v in flags.items()},
        "outputs": [str(p) for p in outputs],
        "seed": args.seed,
    }


def _emit(args, payload: dict, inputs=(), outputs=()):
    doc = {"manifest": _manifest(args, inputs, outputs), **payload}
    text = dumps(doc) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _note(msg: str):
    print(msg, file=sys.stderr)


# --- argument helpers --------------------------------------------------------


def _pair(text: str) -> tuple[int, int]:
    try:
        p, q = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected p,q integers, got {text!r}")
    if (p, q) == (0, 0):
        raise argparse.ArgumentTypeError("class (0,0) is not allowed")
    return p, q


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")
    return vals


def _load_curve(spec: str, samples: int) -> curves.DiscreteCurve:
    """A curve JSON path, or ``line:p,q`` with an optional grading shift ``line:p,q:m``."""
    if spec.startswith("line:"):
        parts = spec[5:].split(":")
        p, q = _pair(parts[0])
        c = curves.line(p, q, samples)
        if len(parts) > 1:
            c = c.shifted(int(parts[1]))
        return c
    try:
        data = json.loads(Path(spec).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {spec}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {spec}: {exc}")
    return curves.DiscreteCurve.from_json(data)


# --- subcommands -------------------------------------------------------------


def _flow_result(res: flow.FlowResult) -> dict:
    fc = res.final_curve
    out = res.summary()
    out["closure"] = list(fc.closure)
    out["maslov"] = curves.maslov(fc)
    return out


def cmd_flow(args) -> int:
    inputs = []
    if args.curve:
        c = _load_curve(args.curve, args.samples)
        inputs.append(args.curve)
    elif args.line:
        rng = np.random.default_rng(args.seed)
        p, q = args.line
        if args.perturb > 0:
            c = curves.perturbed_line(p, q, args.samples, args.perturb, rng)
        else:
            c = curves.line(p, q, args.samples)
    else:
        raise UsageError("flow: give a curve JSON or --line p,q")
    cfg = flow.FlowConfig(step_safety=args.dt_safety, max_time=args.max_time,
                          convergence_phase_spread=args.tol, resample_every=args.resample_every)
    res = flow.run_flow(c, cfg)
    outputs = []
    if args.out_csv:
        Path(args.out_csv).write_text(res.diagnostics.to_csv())
        outputs.append(args.out_csv)
    if args.out_curve:
        Path(args.out_curve).write_text(dumps(res.final_curve.to_json()) + "\n")
        outputs.append(args.out_curve)
    _note(f"flow: {res.status} at t={res.time:.6g} after {res.steps} steps")
    _emit(args, {"result": _flow_result(res)}, inputs, outputs)
    return {flow.CONVERGED: EXIT_OK, flow.SINGULAR: EXIT_SINGULAR, flow.TIMEOUT: EXIT_TIMEOUT}[res.status]


def cmd_phase(args) -> int:
    cls = graded_class(*args.cls, args.lift)
    phi, mu = phase_and_slope(cls)
    _emit(args, {"class": list(args.cls), "phi": phi, "mu": mu})
    return EXIT_OK


def cmd_surgery(args) -> int:
    c1 = _load_curve(args.first, args.samples)
    c2 = _load_curve(args.second, args.samples)
    pts = surgery.intersections(c1, c2)
    report = {
        "points": [p.to_json() for p in pts],
        "phase_window": [surgery.grading_compatible(*p.local_phases) for p in pts],
        "neck_moduli_dimension": surgery.neck_moduli_dimension(pts) if pts else None,
    }
    necks = surgery.NeckParameters(tuple(args.necks)) if args.necks else None
    try:
        comps = surgery.connect_sum_components(c1, c2, necks)
    except surgery.GradedSumError as exc:
        _note(str(exc))
        _emit(args, {"report": report, "error": str(exc)}, [args.first, args.second])
        return EXIT_USAGE
    report["components"] = [
        {"closure": list(c.closure), "maslov": curves.maslov(c), "vertices": c.n} for c in comps
    ]
    outputs = []
    if args.out_curve:
        doc = comps[0].to_json() if len(comps) == 1 else [c.to_json() for c in comps]
        Path(args.out_curve).write_text(dumps(doc) + "\n")
        outputs.append(args.out_curve)
    _emit(args, {"report": report}, [args.first, args.second], outputs)
    return EXIT_OK


def cmd_stability(args) -> int:
    verdict = stability.is_stable(graded_class(*args.cls, args.lift), args.bound)
    _note(f"stability: {verdict.status} ({len(verdict.witnesses)} splittings)")
    _emit(args, {"verdict": verdict.to_json()})
    return EXIT_OK


def cmd_monodromy(args) -> int:
    model = monodromy.FamilyModel.loop(args.model, args.radius, args.samples)
    winding, walls = monodromy.family_track(model)
    _emit(args, {"model": args.model, "winding": winding,
                 "walls": [{"parameter": t, "direction": d} for t, d in walls]})
    return EXIT_OK


def cmd_twist(args) -> int:
    lat = monodromy.PairingLattice.a2_chain(args.n)
    expr = monodromy.parse_expression(args.expression)
    out = monodromy.rewrite(lat, expr, args.route)
    payload = {
        "n": args.n,
        "input": monodromy.format_expression(expr),
        "result": monodromy.format_expression(out),
        "input_class": monodromy.expression_class(expr, lat).tolist(),
        "result_class": monodromy.expression_class(out, lat).tolist(),
    }
    if args.audit:
        phases = {}
        for item in args.audit.split(","):
            name, _, val = item.partition("=")
            try:
                phases[name.strip()] = float(val)
            except ValueError:
                raise UsageError(f"twist: bad --audit entry {item!r}")
        payload["audit"] = monodromy.phase_audit(out, phases)
    _emit(args, payload)
    return EXIT_OK


def cmd_mirror(args) -> int:
    img = mirror.mirror_map(graded_class(*args.cls, args.lift), allow_shift=args.allow_shift)
    _emit(args, {"class": list(args.cls), "sheaf": img.to_json()})
    return EXIT_OK


def cmd_wall(args) -> int:
    _emit(args, {"verdict": mirror.extension_wall(mirror.WallScenario(args.mu, args.t))})
    return EXIT_OK


# --- figures -----------------------------------------------------------------


def _family_figure(kind: str, samples: int) -> dict:
    model = monodromy.FamilyModel.loop(kind, 1.0, samples)
    t, modulus, lift = monodromy.family_phases(model)
    winding, walls = monodromy.family_track(model)
    return {
        "model": kind,
        "winding": winding,
        "walls": [{"parameter": w, "direction": d} for w, d in walls],
        "samples": [{"t": a, "R": r, "phi": p} for a, r, p in zip(t, modulus, lift)],
    }


def _fig3(samples: int) -> dict:
    base = curves.line(1, 0, samples, origin=(0.0, 0.3))
    diag = curves.line(1, 1, samples, origin=(0.3, 0.0))
    sums = []
    for label, c1, c2 in [("L1#L2", base, diag), ("L2#L1[1]", diag, base.shifted(1))]:
        s = curves.resample(surgery.connect_sum(c1, c2), samples, area_neutral=True)
        res = flow.run_flow(s)
        sums.append({
            "label": label,
            "closure": list(s.closure),
            "maslov": curves.maslov(s),
            "average_phase": curves.average_phase(s),
            "curve": s.to_json(),
            "flow": _flow_result(res),
        })
    table = []
    for p, q in [(1, 0), (0, 1), (2, 1)]:
        cls = graded_class(p, q, 0)
        table.append({"class": [p, q], "phi": cls.phase_lift,
                      "sheaf": mirror.mirror_map(cls).to_json()})
    return {
        "sums": sums,
        "unshifted_reverse_sum_allowed": surgery.grading_compatible(math.pi / 4, 0.0),
        "mirror_table": table,
    }


def _grayson(seed: int, samples: int) -> dict:
    c = curves.perturbed_line(2, 1, samples, 0.1, np.random.default_rng(seed))
    res = flow.run_flow(c)
    return {"result": _flow_result(res), "target_length": math.sqrt(5.0)}


def cmd_figures(args) -> int:
    if args.figure == "fig1":
        payload = _family_figure("k3", args.samples)
    elif args.figure == "fig2":
        payload = _family_figure("threefold", args.samples)
    elif args.figure == "fig3":
        payload = _fig3(args.samples)
    else:
        payload = _grayson(args.seed, args.samples)
    _emit(args, {"figure": args.figure, **payload})
    return EXIT_OK


# --- dispatch ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lagstab", description="Graded curves, flow and stability on the flat torus.")
    ap.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    ap.add_argument("--out", help="write the JSON document here instead of stdout")
    # the same two options may also follow the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("flow", parents=[common], help="curve-shortening flow to a straight line")
    p.add_argument("curve", nargs="?", help="curve JSON file or line:p,q[:shift]")
    p.add_argument("--line", type=_pair, help="start from the (p,q) line")
    p.add_argument("--perturb", type=float, default=0.0, help="random normal perturbation amplitude")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--max-time", type=float, default=10.0)
    p.add_argument("--tol", type=float, default=1e-3, help="phase spread for convergence")
    p.add_argument("--dt-safety", type=float, default=1.0)
    p.add_argument("--resample-every", type=int, default=10)
    p.add_argument("--out-csv")
    p.add_argument("--out-curve")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("phase", parents=[common], help="average phase and slope of a class")
    p.add_argument("--class", dest="cls", type=_pair, required=True)
    p.add_argument("--lift", type=int, default=0)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("surgery", parents=[common], help="graded connect sum of two curves")
    p.add_argument("first", help="curve JSON file or line:p,q[:shift]")
    p.add_argument("second", help="curve JSON file or line:p,q[:shift]")
    p.add_argument("--necks", type=_floats)
    p.add_argument("--samples", type=int, default=64, help="vertices for line: inputs")
    p.add_argument("--out-curve")
    p.set_defaults(func=cmd_surgery)

    p = sub.add_parser("stability", parents=[common], help="destabilizer search for a graded class")
    p.add_argument("--class", dest="cls", type=_pair, required=True)
    p.add_argument("--lift", type=int, default=0)
    p.add_argument("--bound", type=int, default=10)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("monodromy", parents=[common], help="winding and walls of a loop around the nodal fibre")
    p.add_argument("--model", choices=["threefold", "k3"], default="threefold")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_monodromy)

    p = sub.add_parser("twist", parents=[common], help="reduce a twist expression, e.g. '(T L1 2 (sum L1 L2))'")
    p.add_argument("expression")
    p.add_argument("--n", type=int, choices=[2, 3], default=2)
    p.add_argument("--route", choices=["absorb", "distribute"], default="absorb")
    p.add_argument("--audit", help="phase audit of the result, e.g. L1=0.01,L2=0")
    p.set_defaults(func=cmd_twist)

    p = sub.add_parser("mirror", parents=[common], help="sheaf class mirror to a line class")
    p.add_argument("--class", dest="cls", type=_pair, required=True)
    p.add_argument("--lift", type=int, default=0)
    p.add_argument("--allow-shift", action="store_true")
    p.set_defaults(func=cmd_mirror)

    p = sub.add_parser("wall", parents=[common], help="extension wall-crossing verdict")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_wall)

    p = sub.add_parser("figures", parents=[common], help="data behind the wall, winding and square pictures")
    p.add_argument("figure", choices=["fig1", "fig2", "fig3", "grayson"])
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_figures)
    return ap


_FIGURE_SAMPLES = {"fig1": 256, "fig2": 256, "fig3": 128, "grayson": 256}


_PAIR_FLAGS = ("--class", "--line")


def _join_pairs(argv):
    """Attach a negative pair such as ``-1,0`` to its flag; argparse reads it as an option."""
    out, it = [], iter(argv)
    for a in it:
        if a in _PAIR_FLAGS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def dispatch(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = ap.parse_args(_join_pairs(argv))
        if args.command is None:
            ap.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "figures" and args.samples is None:
            args.samples = _FIGURE_SAMPLES[args.figure]
        return args.func(args)
    except UsageError as exc:
        _note(str(exc))
        return EXIT_USAGE
    except (ValueError, KeyError, argparse.ArgumentTypeError) as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
