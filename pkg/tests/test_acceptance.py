"""Acceptance criteria 1-9. Each test records one PASS/FAIL line (printed in the summary)."""
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import record
from nested_mzi import field as fe, io, optics, scenarios, spectra, state
from nested_mzi.errors import DegenerateSweep

S3 = 1 / math.sqrt(3)
G0_DECADE = [1e-4, 2e-4, 5e-4, 1e-3]


def check(criterion, passed, detail):
    record(criterion, bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")
    assert passed, detail


def test_1_weak_values():
    net = scenarios.build_scenario("danan-original").net
    dev = max(
        abs(state.weak_value(net, "A") - 1),
        abs(state.weak_value(net, "B") + 1),
        abs(state.weak_value(net, "C") - 1),
        abs(state.joint_weak_value(net, "A", "B")),
    )
    check("1 weak values", dev <= 1e-12, f"max deviation {dev:.2e} (tol 1e-12)")


def _phase_free(a, b):
    ov = np.vdot(b, a)
    return float(np.max(np.abs(a - ov / abs(ov) * b)))


def test_2_pre_post_states():
    net = scenarios.build_scenario("danan-original").net
    dev = max(
        _phase_free(state.forward_state(net).vector(), np.array([S3, 1j * S3, S3])),
        _phase_free(state.backward_state(net).vector(), np.array([S3, -1j * S3, S3])),
    )
    check("2 pre/post states", dev <= 1e-12, f"max deviation {dev:.2e} (tol 1e-12)")


def test_3a_dark_port_static():
    amp = abs(scenarios.build_scenario("danan-original").net.without_drives().dark_port_amplitude())
    check("3a static dark port", amp <= 1e-12, f"|amplitude| {amp:.2e} (tol 1e-12)")


def test_3b_dark_port_antiphase_scaling():
    sc = scenarios.build_scenario("antiphase-ab")
    points = []
    for g0 in G0_DECADE:
        s = scenarios.build_scenario("antiphase-ab", {"g0": g0})
        points.append((g0, float(fe.dark_port_power(s.net, sc.grid, sc.n_samples).max())))
    try:
        k, _ = spectra.fit_slope(points)
        passed, detail = abs(k - 2.0) <= 0.1, f"exponent {k:.4f} (want 2.0 +/- 0.1)"
    except DegenerateSweep as exc:
        peak = max(p for _, p in points)
        passed, detail = False, f"no fit, max dark power {peak:.2e}: {exc}"
    check("3b anti-phase dark-port power slope", passed, detail)


def test_4_peak_disappearance(runs):
    _, rr = runs("antiphase-ab")
    db = rr.verdict("peak-disappears").measured["suppression_db"]
    control = rr.verdict("control-peak").passed
    check(
        "4 peak disappearance",
        db >= 40 and control,
        f"common bin {db:.1f} dB below single-drive reference (want >= 40), f_C control above threshold: {control}",
    )


def test_5_danan_spectrum(runs):
    sc, rr = runs("danan-original")
    rep = rr.spectrum
    abc = all(rep.peak(sc.net.drive(m).freq).above_threshold for m in "ABC")
    margin = min(scenarios.suppression_db(rep.bin(sc.net.drive(m).freq), rep.threshold) for m in "EF")
    check("5 danan spectrum", abc and margin >= 40, f"A,B,C above threshold: {abc}; E,F {margin:.1f} dB below (want >= 40)")


@pytest.mark.parametrize("name, expected", [("blocked-lower", 2.0), ("danan-original", 1.0)])
def test_6_scaling_laws(name, expected):
    rr = scenarios.sweep(scenarios.build_scenario(name), "drives.A.g0", G0_DECADE, expected=expected, tol=0.1)
    m = rr.verdicts[0].measured
    detail = f"exponent {m['exponent']:.4f}" if "exponent" in m else m["error"]
    check(f"6 scaling {name}", rr.passed, f"{detail} (want {expected} +/- 0.1)")


@pytest.mark.parametrize("name", scenarios.BUILTINS)
def test_7_backend_agreement(name, runs):
    _, rr = runs(name)
    worst = []
    err, bound = scenarios.backend_agreement(runs(name)[0].net, rr.timeseries)
    worst.append((1e-3, err, bound))
    sc = scenarios.build_scenario(name, {"g0": 1e-4})
    ts = fe.run_timeseries(sc.net, sc.grid, sc.n_samples)
    err, bound = scenarios.backend_agreement(sc.net, ts)
    worst.append((1e-4, err, bound))
    ok = all(e <= b for _, e, b in worst)
    detail = "; ".join(f"g0={g:g}: err {e:.2e} <= bound {b:.2e}" for g, e, b in worst)
    check(f"7 backend agreement {name}", ok, detail)


def _reported(rr):
    return {p.freq: p.magnitude for p in rr.spectrum.peaks if p.above_threshold}


def _lossless_error(net):
    """Unitarity for an open network; for a blocked one, output plus absorbed power must be 1."""
    U = optics.transfer_matrix(net)
    if not net.block_c:
        return float(np.max(np.abs(U.conj().T @ U - np.eye(3))))
    absorbed = abs(state.forward_state(replace(net, block_c=False)).amps["C"]) ** 2
    return abs(float(np.sum(np.abs(U[:, 0]) ** 2)) + absorbed - 1.0)


def test_8_conservation_and_convergence(runs):
    unitary = max(_lossless_error(scenarios.build_scenario(n).net) for n in scenarios.BUILTINS)
    net = scenarios.build_scenario("danan-original").net
    tilts = {m: (2e-3, 1e-2) for m in optics.MIRRORS}
    energy = abs(sum(fe.detector_frame(net, fe.Grid(), port=p, tilts=tilts).power for p in ("D", "D2", "X")) - 1)
    unitary = max(unitary, energy)
    parseval = max(runs(n)[1].verdict("parseval").measured for n in scenarios.BUILTINS)
    sc, rr = runs("danan-original")
    base = _reported(rr)
    changes = []
    for variant in (
        scenarios.set_param(sc, "grid.n_points", 2 * sc.grid.n_points),
        scenarios.set_param(sc, "sampling.n_samples", 2 * sc.n_samples),
    ):
        other = _reported(scenarios.run(variant))
        if set(other) != set(base):
            changes.append(math.inf)
        else:
            changes.append(max(abs(other[f] - base[f]) / base[f] for f in base))
    ok = unitary <= 1e-9 and parseval <= 1e-9 and max(changes) <= 1e-6
    check(
        "8 conservation/convergence",
        ok,
        f"unitarity/energy {unitary:.1e}, Parseval {parseval:.1e} (tol 1e-9); "
        f"grid x2 {changes[0]:.1e}, samples x2 {changes[1]:.1e} (tol 1e-6)",
    )


def test_9_determinism_roundtrip(runs, tmp_path):
    sc, rr = runs("danan-original")
    same = scenarios.run(sc).to_dict() == rr.to_dict()
    rt = all(scenarios.parse(scenarios.emit(scenarios.build_scenario(n))) == scenarios.build_scenario(n) for n in scenarios.BUILTINS)
    io.write_spectrum_csv(tmp_path / "s.csv", rr.spectrum)
    _, q, p = io.read_spectrum_csv(tmp_path / "s.csv")
    lossless = np.array_equal(q, rr.spectrum.q_power) and np.array_equal(p, rr.spectrum.p_power)
    check("9 determinism/round-trip", same and rt and lossless, f"repeat identical {same}, emit/parse {rt}, csv lossless {lossless}")
