"""Built-in scenarios, config documents, and the experiment runners."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analytic, field as fe, spectra, state
from .errors import (
    ConfigError,
    DegenerateSweep,
    InvalidNetwork,
    InvalidOverride,
    InvalidParamPath,
    MZIError,
    PostSelectionSingular,
    UnknownScenario,
)
from .optics import MIRRORS, PATHS, MirrorDrive, NetworkSpec, build_network

BUILTINS = ("danan-original", "antiphase-ab", "blocked-lower")
DEFAULT_FREQS = {"A": 30, "B": 32, "C": 34, "E": 36, "F": 38}
DEFAULT_G0 = 1e-3

EXACT_TOL = 1e-12
AGREEMENT_FACTOR = 5.0
AGREEMENT_FLOOR = 1e-9
SUPPRESSION_DB = 40.0
PARSEVAL_TOL = 1e-9

NETWORK_KEYS = ("outer_T", "inner_T1", "inner_T2", "inner_phase", "outer_phase", "block_c", "leak_eps")
DRIVE_KEYS = ("name", "freq", "g0", "phase", "lever")
TOP_KEYS = ("name", "network", "drives", "grid", "sampling", "sweep")


@dataclass(frozen=True)
class Scenario:
    name: str
    net: NetworkSpec
    grid: fe.Grid = fe.Grid()
    n_samples: int = fe.DEFAULT_SAMPLES
    sweep: tuple[str, tuple[float, ...]] | None = None


@dataclass(frozen=True)
class Verdict:
    claim: str
    passed: bool
    measured: object


@dataclass
class RunReport:
    scenario: str
    weak_values: dict[str, complex] | None
    dark_port_residual: float
    spectrum: spectra.SpectrumReport
    verdicts: list[Verdict] = field(default_factory=list)
    timeseries: fe.TimeSeries | None = None
    reference_power: float | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, claim: str) -> Verdict:
        for v in self.verdicts:
            if v.claim == claim:
                return v
        raise KeyError(claim)

    def to_dict(self) -> dict:
        wv = None
        if self.weak_values is not None:
            wv = {k: [v.real, v.imag] for k, v in self.weak_values.items()}
        return {
            "scenario": self.scenario,
            "weak_values": wv,
            "dark_port_residual": self.dark_port_residual,
            "peaks": [
                {"freq": p.freq, "magnitude": p.magnitude, "above_threshold": p.above_threshold}
                for p in self.spectrum.peaks
            ],
            "slopes": [
                {"param": s.param, "exponent": s.exponent, "residual": s.residual, "points": [list(x) for x in s.points]}
                for s in self.spectrum.slopes
            ],
            "verdicts": [{"claim": v.claim, "passed": v.passed, "measured": _jsonable(v.measured)} for v in self.verdicts],
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


# --- builders ---------------------------------------------------------------


def _default_drives(antiphase: bool = False) -> list[MirrorDrive]:
    drives = []
    for name, f in DEFAULT_FREQS.items():
        phase = 0.0
        if antiphase and name == "B":
            f, phase = DEFAULT_FREQS["A"], math.pi
        drives.append(MirrorDrive(name, f, DEFAULT_G0, phase, 1.0))
    return drives


def build_scenario(name: str, overrides: dict | None = None) -> Scenario:
    """Construct a built-in scenario, then apply ``{param path: value}`` overrides.

    Besides the paths accepted by :func:`set_param`, ``g0`` and ``lever``
    set that field on every drive.
    """
    if name not in BUILTINS:
        raise UnknownScenario(f"unknown scenario {name!r}; built-ins: {', '.join(BUILTINS)}")
    net = build_network(
        drives=_default_drives(antiphase=name == "antiphase-ab"),
        block_c=name == "blocked-lower",
    )
    sc = Scenario(name, net)
    for path, value in (overrides or {}).items():
        try:
            if path in ("g0", "lever"):
                drives = [replace(d, **{path: float(value)}) for d in sc.net.drives]
                sc = _with_net(sc, drives=drives)
            else:
                sc = set_param(sc, path, value)
        except (InvalidParamPath, InvalidNetwork, ValueError, TypeError) as exc:
            raise InvalidOverride(f"{path}={value!r}: {exc}") from None
    return sc


def _with_net(sc: Scenario, n_samples: int | None = None, **changes) -> Scenario:
    params = {k: getattr(sc.net, k) for k in NETWORK_KEYS}
    params["drives"] = sc.net.drives
    params.update(changes)
    n = sc.n_samples if n_samples is None else n_samples
    return replace(sc, net=build_network(n_samples=n, **params), n_samples=n)


def set_param(sc: Scenario, path: str, value) -> Scenario:
    """Return a copy with one scalar field replaced.

    Paths: ``network.<field>``, ``drives.<mirror>.<field>``,
    ``grid.n_points``, ``grid.half_width``, ``sampling.n_samples``.
    """
    parts = path.split(".")
    if parts[0] == "network" and len(parts) == 2 and parts[1] in NETWORK_KEYS:
        v = bool(value) if parts[1] == "block_c" else float(value)
        return _with_net(sc, **{parts[1]: v})
    if parts[0] == "drives" and len(parts) == 3 and parts[2] in DRIVE_KEYS[1:]:
        name, key = parts[1], parts[2]
        if sc.net.drive(name) is None:
            raise InvalidParamPath(f"{path}: scenario has no drive on mirror {name!r}")
        v = value if key == "freq" else float(value)
        drives = [replace(d, **{key: v}) if d.name == name else d for d in sc.net.drives]
        return _with_net(sc, drives=drives)
    if parts[0] == "grid" and len(parts) == 2 and parts[1] in ("n_points", "half_width"):
        kw = asdict(sc.grid)
        kw[parts[1]] = int(value) if parts[1] == "n_points" else float(value)
        return replace(sc, grid=fe.Grid(**kw))
    if path == "sampling.n_samples":
        return _with_net(sc, n_samples=int(value))
    raise InvalidParamPath(f"unknown parameter path {path!r}")


def get_param(sc: Scenario, path: str):
    parts = path.split(".")
    if parts[0] == "network" and len(parts) == 2 and parts[1] in NETWORK_KEYS:
        return getattr(sc.net, parts[1])
    if parts[0] == "drives" and len(parts) == 3 and parts[2] in DRIVE_KEYS[1:]:
        d = sc.net.drive(parts[1])
        if d is None:
            raise InvalidParamPath(f"{path}: scenario has no drive on mirror {parts[1]!r}")
        return getattr(d, parts[2])
    if parts[0] == "grid" and len(parts) == 2:
        return getattr(sc.grid, parts[1])
    if path == "sampling.n_samples":
        return sc.n_samples
    raise InvalidParamPath(f"unknown parameter path {path!r}")


# --- config documents ---------------------------------------------------------


def to_config(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "network": {k: getattr(sc.net, k) for k in NETWORK_KEYS},
        "drives": [asdict(d) for d in sc.net.drives],
        "grid": asdict(sc.grid),
        "sampling": {"n_samples": sc.n_samples},
        "sweep": None if sc.sweep is None else {"param": sc.sweep[0], "values": list(sc.sweep[1])},
    }


def emit(sc: Scenario) -> str:
    return json.dumps(to_config(sc), indent=2) + "\n"


def _strict(section: str, obj, allowed) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown keys {unknown}")
    return obj


def from_config(doc: dict) -> Scenario:
    """Parse a config document. Unknown keys anywhere are errors."""
    _strict("config", doc, TOP_KEYS)
    if "name" not in doc or not isinstance(doc["name"], str):
        raise ConfigError("config: 'name' (string) is required")
    try:
        network = _strict("network", doc.get("network", {}), NETWORK_KEYS)
        drives = []
        for i, d in enumerate(doc.get("drives", [])):
            _strict(f"drives[{i}]", d, DRIVE_KEYS)
            drives.append(MirrorDrive(**d))
        grid = fe.Grid(**_strict("grid", doc.get("grid", {}), ("n_points", "half_width")))
        sampling = _strict("sampling", doc.get("sampling", {}), ("n_samples",))
        n_samples = int(sampling.get("n_samples", fe.DEFAULT_SAMPLES))
        net = build_network(drives=drives, n_samples=n_samples, **network)
        sweep = doc.get("sweep")
        if sweep is not None:
            _strict("sweep", sweep, ("param", "values"))
            sweep = (str(sweep["param"]), tuple(float(v) for v in sweep["values"]))
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from None
    return Scenario(doc["name"], net, grid, n_samples, sweep)


def parse(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from None
    return from_config(doc)


def load(spec: str) -> Scenario:
    """Built-in name or path to a config document."""
    if spec in BUILTINS:
        return build_scenario(spec)
    path = Path(spec)
    if not path.is_file():
        raise UnknownScenario(f"{spec!r} is neither a built-in scenario nor a config file")
    return parse(path.read_text())


# --- runners -----------------------------------------------------------------


def _kind(sc: Scenario) -> str | None:
    return sc.name if sc.name in BUILTINS else None


def _max_g0(net: NetworkSpec) -> float:
    return max((d.g0 for d in net.drives), default=0.0)


def _weak_value_checks(net: NetworkSpec) -> list[Verdict]:
    expected = {"A": 1.0, "B": -1.0, "C": 1.0}
    try:
        got = {p: state.weak_value(net, p) for p in PATHS}
        joint = state.joint_weak_value(net, "A", "B")
    except PostSelectionSingular as exc:
        return [Verdict("weak-values", False, str(exc))]
    dev = max(abs(got[p] - expected[p]) for p in PATHS)
    dev = max(dev, abs(joint))
    fwd = state.forward_state(net).vector()
    bwd = state.backward_state(net).vector()
    s = 1 / math.sqrt(3)
    dev_states = max(
        _phase_free_distance(fwd, np.array([s, 1j * s, s])),
        _phase_free_distance(bwd, np.array([s, -1j * s, s])),
    )
    return [
        Verdict("weak-values", dev <= EXACT_TOL, dev),
        Verdict("pre-post-states", dev_states <= EXACT_TOL, dev_states),
    ]


def _phase_free_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| after removing the best global phase."""
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def backend_agreement(net: NetworkSpec, ts: fe.TimeSeries) -> tuple[float, float]:
    """(max |q_field - q_first_order|, allowed bound)."""
    model = analytic.FirstOrderModel.from_network(net)
    qa = analytic.predict_q(model, ts.t)
    err = float(np.max(np.abs(ts.q - qa)))
    bound = AGREEMENT_FACTOR * _max_g0(net) * float(np.max(np.abs(qa))) + AGREEMENT_FLOOR
    return err, bound


def parseval_error(ts: fe.TimeSeries, report: spectra.SpectrumReport) -> float:
    ms = float(np.mean(np.asarray(ts.q) ** 2))
    total = float(np.sum(report.q_power))
    return abs(total - ms) / ms if ms > 0 else abs(total)


def suppression_db(power: float, reference: float) -> float:
    if power <= 0:
        return math.inf
    return 10.0 * math.log10(reference / power)


def run(
    sc: Scenario,
    factor: float = spectra.PEAK_FACTOR,
    floor: float = spectra.SENSITIVITY,
    workers: int = 1,
) -> RunReport:
    """Run every engine on ``sc`` and collect the verdicts relevant to it."""
    try:
        return _run(sc, factor, floor, workers)
    except MZIError as exc:
        raise type(exc)(f"scenario {sc.name!r}: {exc}") from exc


def _run(sc: Scenario, factor: float, floor: float, workers: int) -> RunReport:
    net = sc.net
    kind = _kind(sc)
    try:
        wv = {m: state.weak_value(net, m) for m in MIRRORS}
    except PostSelectionSingular:
        wv = None
    residual = abs(net.dark_port_amplitude())
    ts = fe.run_timeseries(net, sc.grid, sc.n_samples, workers=workers)
    report = spectra.power_spectrum(ts, _freqs(net), factor, floor)
    verdicts: list[Verdict] = []

    if kind in ("danan-original", "antiphase-ab"):
        verdicts += _weak_value_checks(net)
    if net.leak_eps == 0.0:
        verdicts.append(Verdict("dark-port-static", residual <= EXACT_TOL, residual))

    perr = parseval_error(ts, report)
    verdicts.append(Verdict("parseval", perr <= PARSEVAL_TOL, perr))
    err, bound = backend_agreement(net, ts)
    verdicts.append(Verdict("backend-agreement", err <= bound, {"max_error": err, "bound": bound}))

    reference = None
    if kind == "antiphase-ab":
        dark = fe.dark_port_power(net, sc.grid, sc.n_samples)
        dark_amp = math.sqrt(float(dark.max()))
        verdicts.append(Verdict("dark-port-driven", dark_amp <= EXACT_TOL, dark_amp))
        reference = single_drive_reference(sc, workers)
    verdicts += spectral_verdicts(sc, report, reference)
    return RunReport(sc.name, wv, residual, report, verdicts, ts, reference)


def _freqs(net: NetworkSpec) -> list[int]:
    return sorted({d.freq for d in net.drives})


def single_drive_reference(sc: Scenario, workers: int = 1) -> float | None:
    """Quad power at A's frequency with B's drive removed (everything else unchanged)."""
    net = sc.net
    a = net.drive("A")
    if a is None:
        return None
    ref_net = replace(net, drives=tuple(d for d in net.drives if d.name != "B"))
    ref_ts = fe.run_timeseries(ref_net, sc.grid, sc.n_samples, workers=workers)
    return spectra.power_spectrum(ref_ts, [a.freq]).bin(a.freq)


def spectral_verdicts(sc: Scenario, report: spectra.SpectrumReport, reference: float | None = None) -> list[Verdict]:
    """Verdicts that depend on the peak threshold of ``report``."""
    net = sc.net
    kind = _kind(sc)
    out: list[Verdict] = []
    if kind == "danan-original":
        abc = [report.peak(net.drive(m).freq) for m in "ABC" if net.drive(m)]
        out.append(
            Verdict("peaks-abc", bool(abc) and all(p.above_threshold for p in abc), {p.freq: p.power for p in abc})
        )
        ef = [report.peak(net.drive(m).freq) for m in "EF" if net.drive(m)]
        margin = min((suppression_db(p.power, report.threshold) for p in ef), default=math.inf)
        out.append(Verdict("no-peaks-ef", margin >= SUPPRESSION_DB, {"db_below_threshold": margin}))
    elif kind == "antiphase-ab":
        a = net.drive("A")
        if a is not None and reference is not None:
            db = suppression_db(report.bin(a.freq), reference)
            out.append(Verdict("peak-disappears", db >= SUPPRESSION_DB, {"suppression_db": db, "reference_power": reference}))
        c = net.drive("C")
        if c is not None:
            out.append(Verdict("control-peak", report.peak(c.freq).above_threshold, report.bin(c.freq)))
    elif kind == "blocked-lower":
        above = [int(f) for f in np.nonzero(report.q_power[1:] > report.threshold)[0] + 1]
        out.append(Verdict("no-peaks", not above, {"bins_above": above, "max_power": float(report.q_power[1:].max())}))
    return out


def rejudge(sc: Scenario, rr: "RunReport", factor: float, floor: float) -> list[Verdict]:
    """Recompute the threshold-dependent verdicts of a finished run with another threshold."""
    report = spectra.power_spectrum(rr.timeseries, _freqs(sc.net), factor, floor)
    return spectral_verdicts(sc, report, rr.reference_power)


def sweep(
    sc: Scenario,
    param: str,
    values,
    expected: float | None = None,
    tol: float | None = None,
    workers: int = 1,
) -> RunReport:
    """Vary one scalar and fit the log-log slope of the response.

    ``drives.<m>.g0`` sweeps measure :func:`spectra.single_bin` of the quad
    signal at mirror ``m``'s frequency. ``network.leak_eps`` sweeps measure the
    change in mean detector power relative to ``leak_eps = 0``. The expected
    exponent defaults to 2 with the C path blocked and 1 otherwise.
    """
    values = [float(v) for v in values]
    if not values or min(values) <= 0:
        raise DegenerateSweep("sweep values must be positive")
    parts = param.split(".")
    if parts[0] == "drives" and len(parts) == 3 and parts[2] == "g0":
        drive = sc.net.drive(parts[1])
        if drive is None:
            raise InvalidParamPath(f"{param}: scenario has no drive on mirror {parts[1]!r}")

        def measure(s: Scenario, ts: fe.TimeSeries) -> float:
            return spectra.single_bin(ts, drive.freq, "q")

        default_tol = 0.1
    elif param == "network.leak_eps":
        base_ts = fe.run_timeseries(set_param(sc, param, 0.0).net, sc.grid, sc.n_samples, workers=workers)
        base = float(np.mean(base_ts.p))

        def measure(s: Scenario, ts: fe.TimeSeries) -> float:
            return abs(float(np.mean(ts.p)) - base)

        default_tol = 0.01 if sc.net.block_c else 0.1
    else:
        raise InvalidParamPath(f"{param!r}: sweeps take drives.<mirror>.g0 or network.leak_eps")

    points = []
    last_ts = None
    for v in values:
        s = set_param(sc, param, v)
        last_ts = fe.run_timeseries(s.net, s.grid, s.n_samples, workers=workers)
        points.append((v, measure(s, last_ts)))
    report = spectra.power_spectrum(last_ts, _freqs(sc.net))
    if expected is None:
        expected = 2.0 if sc.net.block_c else 1.0
    tol = default_tol if tol is None else tol
    try:
        k, resid = spectra.fit_slope(points)
        report.slopes = [spectra.Slope(param, k, resid, tuple(points))]
        verdict = Verdict("scaling-exponent", abs(k - expected) <= tol, {"exponent": k, "expected": expected, "tol": tol})
    except DegenerateSweep as exc:
        report.slopes = []
        verdict = Verdict("scaling-exponent", False, {"error": str(exc), "expected": expected, "tol": tol})
    try:
        wv = {m: state.weak_value(sc.net, m) for m in MIRRORS}
    except PostSelectionSingular:
        wv = None
    return RunReport(sc.name, wv, abs(sc.net.dark_port_amplitude()), report, [verdict], last_ts)
