"""First-order quad-cell prediction from weak values."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PostSelectionSingular
from .optics import MirrorDrive, NetworkSpec, mirror_orientation
from .state import post_selection_probability, weak_value, weighted_weak_values

# d/dd erf(sqrt(2) d) at d = 0: quad response of a unit Gaussian per unit displacement
KAPPA = 2.0 * math.sqrt(2.0) / math.sqrt(math.pi)


@dataclass(frozen=True)
class FirstOrderModel:
    """Linear response of the detector quad signal to mirror displacements.

    ``weights[m]`` is ``|<post|pre>|^2`` times the weak value at mirror ``m``;
    it stays finite for an orthogonal post-selection, where the response
    vanishes. ``orientation[m]`` is the sign with which mirror ``m``'s tilt
    reaches the detector (each reflection mirrors the transverse axis).
    """

    kappa: float
    weights: dict[str, complex]
    orientation: dict[str, int]
    drives: tuple[MirrorDrive, ...]
    weak_values: dict[str, complex] | None = None
    post_probability: float = 0.0

    @classmethod
    def from_network(cls, net: NetworkSpec, port: str = "D") -> "FirstOrderModel":
        try:
            wv = {m: weak_value(net, m, port) for m in ("A", "B", "C", "E", "F")}
        except PostSelectionSingular:
            wv = None
        return cls(
            kappa=KAPPA,
            weights=weighted_weak_values(net, port),
            orientation=mirror_orientation(net, port),
            drives=tuple(net.drives),
            weak_values=wv,
            post_probability=post_selection_probability(net, port),
        )


def predict_q(model: FirstOrderModel, t) -> np.ndarray:
    """kappa * sum_m Re(weight_m) * orientation_m * d_m(t)."""
    t = np.asarray(t, dtype=float)
    q = np.zeros_like(t)
    for dr in model.drives:
        w = model.weights.get(dr.name, 0j).real
        s = model.orientation.get(dr.name, 0)
        if w and s:
            q = q + model.kappa * w * s * dr.displacement(t)
    return q
