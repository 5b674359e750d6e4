"""Forward/backward path states and weak values of path projectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PostSelectionSingular
from .optics import (
    AMPLITUDES,
    MIRRORS,
    OUTPUT_PORTS,
    PATHS,
    NetworkSpec,
    propagate,
    source_amplitudes,
)

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class PathState:
    """Amplitudes at the mirror planes.

    ``amps`` holds A, B, C; ``planes`` holds every mirror plane (E and F
    included). ``overlap`` is <post|pre> once both states are known.
    """

    amps: dict[str, complex]
    planes: dict[str, complex]
    overlap: complex | None = None

    def vector(self, labels=PATHS) -> np.ndarray:
        return np.array([self.planes[k] for k in labels], dtype=complex)


def forward_state(net: NetworkSpec) -> PathState:
    _, snaps = propagate(net.elements(), source_amplitudes(), AMPLITUDES)
    return PathState({k: snaps[k] for k in PATHS}, {k: snaps[k] for k in MIRRORS})


def backward_state(net: NetworkSpec, detector: str = "D") -> PathState:
    """Post-selected state, propagated backwards from ``detector``.

    Each plane value is ``conj(<detector|U|plane>)``, so the state is a ket
    that can be paired with the forward state through the usual inner product.
    """
    if detector not in OUTPUT_PORTS:
        raise ValueError(f"unknown output port {detector!r}")
    start = {p: (1.0 + 0j if p == detector else 0j) for p in OUTPUT_PORTS}
    _, snaps = propagate(net.elements(), start, AMPLITUDES, adjoint=True)
    fwd = forward_state(net)
    overlap = sum(np.conj(snaps[k]) * fwd.amps[k] for k in PATHS)
    return PathState({k: snaps[k] for k in PATHS}, {k: snaps[k] for k in MIRRORS}, complex(overlap))


def _pair(net: NetworkSpec, detector: str = "D") -> tuple[PathState, PathState, complex]:
    fwd = forward_state(net)
    bwd = backward_state(net, detector)
    overlap = bwd.overlap
    if abs(overlap) <= SINGULAR_TOL:
        raise PostSelectionSingular(
            f"|<post|pre>| = {abs(overlap):.3g} <= {SINGULAR_TOL}; weak values are undefined"
        )
    return fwd, bwd, overlap


def weak_value(net: NetworkSpec, path: str, detector: str = "D") -> complex:
    """Weak value of the projector onto ``path``.

    ``path`` may be any mirror plane; E and F are evaluated with the same
    normalisation as A/B/C (the overlap is the same on every plane).
    """
    if path not in MIRRORS:
        raise KeyError(path)
    fwd, bwd, overlap = _pair(net, detector)
    return complex(np.conj(bwd.planes[path]) * fwd.planes[path] / overlap)


def joint_weak_value(net: NetworkSpec, p1: str, p2: str, detector: str = "D") -> complex:
    # |p1><p1|p2><p2| is zero unless the labels coincide
    for p in (p1, p2):
        if p not in PATHS:
            raise KeyError(p)
    if p1 != p2:
        _pair(net, detector)
        return 0j
    return weak_value(net, p1, detector)


def weighted_weak_values(net: NetworkSpec, detector: str = "D") -> dict[str, complex]:
    """``|<post|pre>|^2`` times each weak value, i.e. ``conj(<post|pre>) <post|P|pre>``.

    Stays finite when the post-selection is orthogonal.
    """
    fwd = forward_state(net)
    bwd = backward_state(net, detector)
    return {
        k: complex(np.conj(bwd.overlap) * np.conj(bwd.planes[k]) * fwd.planes[k]) for k in MIRRORS
    }


def post_selection_probability(net: NetworkSpec, detector: str = "D") -> float:
    return float(abs(backward_state(net, detector).overlap) ** 2)
