"""Command-line entry point.

Exit codes: 0 when every verdict passes, 2 when any verdict fails, 1 for
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io, scenarios, state
from .errors import MZIError

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise MZIError(f"--set expects path=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = json.loads(v) if v.strip() in ("true", "false") else v
    return out


def _scenario(args):
    sc = scenarios.load(args.scenario)
    for path, value in _overrides(getattr(args, "set", None)).items():
        try:
            sc = scenarios.set_param(sc, path, value) if path not in ("g0", "lever") else _all_drives(sc, path, value)
        except (ValueError, TypeError) as exc:
            raise MZIError(f"--set {path}: {exc}") from None
    return sc


def _all_drives(sc, key, value):
    for d in sc.net.drives:
        sc = scenarios.set_param(sc, f"drives.{d.name}.{key}", value)
    return sc


def _summary(report) -> str:
    lines = [f"scenario: {report.scenario}"]
    for v in report.verdicts:
        lines.append(f"  [{'PASS' if v.passed else 'FAIL'}] {v.claim}: {v.measured}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    sc = _scenario(args)
    report = scenarios.run(sc, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_spectrum_csv(out / "spectrum.csv", report.spectrum)
    io.write_report_json(out / "report.json", report.to_dict())
    if args.dump_timeseries:
        io.write_timeseries_csv(out / "timeseries.csv", report.timeseries)
    print(_summary(report))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_weak_values(args) -> int:
    sc = _scenario(args)
    fwd = state.forward_state(sc.net)
    bwd = state.backward_state(sc.net)
    doc = {
        "scenario": sc.name,
        "forward": {k: [v.real, v.imag] for k, v in fwd.planes.items()},
        "backward": {k: [v.real, v.imag] for k, v in bwd.planes.items()},
        "overlap": [bwd.overlap.real, bwd.overlap.imag],
    }
    try:
        doc["weak_values"] = {m: _pair(state.weak_value(sc.net, m)) for m in ("A", "B", "C", "E", "F")}
        doc["joint_weak_values"] = {
            f"{a}{b}": _pair(state.joint_weak_value(sc.net, a, b)) for a, b in (("A", "B"), ("B", "C"), ("A", "C"))
        }
    except state.PostSelectionSingular as exc:
        doc["weak_values"] = None
        doc["note"] = str(exc)
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise MZIError(f"--values must be a comma-separated list of numbers, got {args.values!r}") from None
    report = scenarios.sweep(sc, args.param, values, expected=args.expect, workers=args.workers)
    doc = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_spectrum_csv(out / "spectrum.csv", report.spectrum)
        io.write_report_json(out / "report.json", doc)
    print(json.dumps({"slopes": doc["slopes"], "verdicts": doc["verdicts"]}, indent=2))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_emit(args) -> int:
    sys.stdout.write(scenarios.emit(scenarios.build_scenario(args.builtin)))
    return EXIT_OK


def cmd_list(args) -> int:
    print("\n".join(scenarios.BUILTINS))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nested-mzi", description="Nested Mach-Zehnder weak-measurement simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp):
        sp.add_argument("--scenario", required=True, help="built-in name or path to a config document")
        sp.add_argument("--set", action="append", metavar="PATH=VALUE", help="override a parameter (repeatable)")
        sp.add_argument("--workers", type=int, default=1, help="threads for time-sample evaluation")

    r = sub.add_parser("run", help="run a scenario and write spectrum.csv / report.json")
    scenario_args(r)
    r.add_argument("--out", required=True)
    r.add_argument("--dump-timeseries", action="store_true")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("weak-values", help="print pre/post states and weak values")
    w.add_argument("--scenario", required=True)
    w.add_argument("--set", action="append", metavar="PATH=VALUE")
    w.set_defaults(func=cmd_weak_values)

    s = sub.add_parser("sweep", help="sweep one parameter and fit the log-log slope")
    scenario_args(s)
    s.add_argument("--param", required=True, help="drives.<mirror>.g0 or network.leak_eps")
    s.add_argument("--values", required=True, help="comma-separated positive values")
    s.add_argument("--expect", type=float, default=None, help="expected exponent (default: 2 blocked, 1 unblocked)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("emit", help="print a built-in scenario as a config document")
    e.add_argument("--builtin", required=True)
    e.set_defaults(func=cmd_emit)

    ls = sub.add_parser("list", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MZIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
