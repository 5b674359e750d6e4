import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nested_mzi import optics, state
from nested_mzi.errors import PostSelectionSingular
from nested_mzi.optics import build_network

S3 = 1 / math.sqrt(3)


def phase_free(a, b):
    ov = np.vdot(b, a)
    return np.max(np.abs(a - ov / abs(ov) * b))


def test_forward_backward_default():
    net = build_network()
    assert phase_free(state.forward_state(net).vector(), np.array([S3, 1j * S3, S3])) <= 1e-12
    assert phase_free(state.backward_state(net).vector(), np.array([S3, -1j * S3, S3])) <= 1e-12


def test_overlap_is_transfer_amplitude():
    # brute force: <port|U|src> from the full matrix equals <post|pre> at the mirror planes
    net = build_network(inner_phase=0.3, outer_T=0.4)
    U = optics.transfer_matrix(net)
    for i, port in enumerate(optics.OUTPUT_PORTS):
        assert state.backward_state(net, port).overlap == pytest.approx(U[i, 0], abs=1e-12)


def test_swapped_detector_is_orthogonal():
    net = build_network()
    M = optics.mirror_plane_matrix(net)
    d = state.backward_state(net, "D").vector()
    d2 = state.backward_state(net, "D2").vector()
    assert np.allclose(d, np.conj(M[0]), atol=1e-12)
    assert np.allclose(d2, np.conj(M[1]), atol=1e-12)
    assert abs(np.vdot(d2, d)) <= 1e-12


def test_block_c_zeroes_both_states():
    net = build_network(block_c=True)
    assert state.forward_state(net).amps["C"] == 0
    assert state.backward_state(net).amps["C"] == 0
    fwd = state.forward_state(net).amps
    assert fwd["A"] == pytest.approx(S3) and fwd["B"] == pytest.approx(1j * S3)


@pytest.mark.parametrize("path, expected", [("A", 1), ("B", -1), ("C", 1), ("E", 0), ("F", 0)])
def test_weak_values(path, expected):
    assert abs(state.weak_value(build_network(), path) - expected) <= 1e-12


def test_weak_value_quotient_by_hand():
    fwd = np.array([S3, 1j * S3, S3])
    bwd = np.array([S3, -1j * S3, S3])
    overlap = np.vdot(bwd, fwd)
    assert overlap == pytest.approx(1 / 3)
    wc = np.conj(bwd[2]) * fwd[2] / overlap
    assert state.weak_value(build_network(), "C") == pytest.approx(wc, abs=1e-12)


@pytest.mark.parametrize("p1, p2, expected", [("A", "B", 0), ("A", "A", 1), ("B", "C", 0)])
def test_joint_weak_values(p1, p2, expected):
    assert abs(state.joint_weak_value(build_network(), p1, p2) - expected) <= 1e-12


def test_blocked_is_singular():
    net = build_network(block_c=True)
    with pytest.raises(PostSelectionSingular):
        state.weak_value(net, "A")
    assert state.post_selection_probability(net) <= 1e-24
    assert all(abs(w) <= 1e-12 for w in state.weighted_weak_values(net).values())


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
    st.floats(-math.pi, math.pi),
    st.floats(-math.pi, math.pi),
)
def test_sum_rule_and_inner_plane(t0, t1, t2, p1, p2):
    net = build_network(outer_T=t0, inner_T1=t1, inner_T2=t2, inner_phase=p1, outer_phase=p2)
    assume(state.post_selection_probability(net) > 1e-6)
    w = {m: state.weak_value(net, m) for m in optics.MIRRORS}
    assert abs(w["A"] + w["B"] + w["C"] - 1) <= 1e-9
    # E carries exactly the A+B subspace
    assert abs(w["E"] - w["A"] - w["B"]) <= 1e-9


def test_post_selection_probability_default():
    assert state.post_selection_probability(build_network()) == pytest.approx(1 / 9, abs=1e-12)
