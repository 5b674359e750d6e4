import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nested_mzi import analytic, field as fe
from nested_mzi.optics import MirrorDrive, build_network


def test_kappa_is_slope_of_displaced_gaussian():
    h = 1e-5
    grid = fe.Grid()
    g = fe.gaussian_mode(grid)
    numeric = (fe.perturb(g, 0, h).quad - fe.perturb(g, 0, -h).quad) / (2 * h)
    assert numeric == pytest.approx(analytic.KAPPA, abs=1e-9)
    closed = (math.erf(math.sqrt(2) * h) - math.erf(-math.sqrt(2) * h)) / (2 * h)
    assert closed == pytest.approx(analytic.KAPPA, abs=1e-9)


def test_zero_drives():
    model = analytic.FirstOrderModel.from_network(build_network())
    assert np.all(analytic.predict_q(model, np.linspace(0, 1, 50)) == 0)


def test_single_c_tone_amplitude():
    g0, lever = 1e-3, 1.7
    net = build_network(drives=[MirrorDrive("C", 34, g0, lever=lever)])
    model = analytic.FirstOrderModel.from_network(net)
    t = np.arange(4096) / 4096
    q = analytic.predict_q(model, t)
    # weak value +1; q is the raw quad difference, scaled by the detection probability
    expected = analytic.KAPPA * g0 * lever * model.post_probability
    assert np.max(np.abs(q)) == pytest.approx(expected, rel=1e-9)
    assert model.weak_values["C"] == pytest.approx(1.0)


def test_antiphase_ab_cancels_in_phase_doubles():
    t = np.linspace(0, 1, 200, endpoint=False)
    anti = build_network(drives=[MirrorDrive("A", 30), MirrorDrive("B", 30, phase=math.pi)])
    same = build_network(drives=[MirrorDrive("A", 30), MirrorDrive("B", 30)])
    qa = analytic.predict_q(analytic.FirstOrderModel.from_network(anti), t)
    qs = analytic.predict_q(analytic.FirstOrderModel.from_network(same), t)
    assert np.max(np.abs(qa)) <= 1e-12 * np.max(np.abs(qs))
    single = analytic.predict_q(analytic.FirstOrderModel.from_network(build_network(drives=[MirrorDrive("A", 30)])), t)
    assert np.allclose(qs, 2 * single, atol=1e-18)


@given(st.floats(0, 1e-3), st.floats(0, 1e-3))
def test_linear_in_drives(g1, g2):
    t = np.linspace(0, 1, 64, endpoint=False)

    def q(*drives):
        return analytic.predict_q(analytic.FirstOrderModel.from_network(build_network(drives=drives)), t)

    both = q(MirrorDrive("A", 3, g1), MirrorDrive("C", 5, g2))
    assert np.allclose(both, q(MirrorDrive("A", 3, g1)) + q(MirrorDrive("C", 5, g2)), atol=1e-18)


def test_blocked_model_finite_and_silent():
    net = build_network(block_c=True, drives=[MirrorDrive("A", 30)])
    model = analytic.FirstOrderModel.from_network(net)
    assert model.weak_values is None
    assert np.max(np.abs(analytic.predict_q(model, np.linspace(0, 1, 64)))) <= 1e-18
