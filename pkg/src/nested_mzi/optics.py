"""Element algebra and the fixed nested Mach-Zehnder topology.

Layout (mirror labels in capitals, beam splitters BS1..BS4)::

    src --BS1--> E --BS2--> A --+
          |          \\--> B --BS3--> F --BS4--> D   (detector)
          |                      \\--> X      \\--> D2
          +--> C ----------------------------/

BS1/BS4 use ``outer_T``; BS2/BS3 use ``inner_T1``/``inner_T2``. The inner
output toward F is the dark port. Each arm delay (``inner_phase`` on A,
``outer_phase`` on C) is split evenly either side of its mirror.

All beam splitters use the symmetric convention: transmitted amplitude
``sqrt(T)``, reflected amplitude ``1j*sqrt(1-T)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidNetwork

MIRRORS = ("E", "A", "B", "C", "F")
PATHS = ("A", "B", "C")
INPUT_PORTS = ("src", "aux1", "aux2")
OUTPUT_PORTS = ("D", "D2", "X")

WEAK_G0 = 0.05
DEFAULT_N_SAMPLES = 4096


@dataclass(frozen=True)
class BeamSplitter:
    T: float

    def __post_init__(self):
        if not 0.0 <= self.T <= 1.0 or math.isnan(self.T):
            raise InvalidNetwork(f"beam-splitter transmissivity {self.T!r} outside [0, 1]")

    @property
    def t(self) -> complex:
        return complex(math.sqrt(self.T), 0.0)

    @property
    def r(self) -> complex:
        return complex(0.0, math.sqrt(1.0 - self.T))

    @property
    def matrix(self) -> np.ndarray:
        t, r = self.t, self.r
        return np.array([[t, r], [r, t]], dtype=complex)


def apply_beamsplitter(bs: BeamSplitter, in1: complex, in2: complex) -> tuple[complex, complex]:
    """Mix two input amplitudes; ``out1`` carries the transmitted part of ``in1``."""
    t, r = bs.t, bs.r
    return t * in1 + r * in2, r * in1 + t * in2


@dataclass(frozen=True)
class MirrorDrive:
    """Sinusoidal tilt of one mirror.

    ``g0`` is the peak dimensionless phase-ramp amplitude (2*k*dtheta*w) and
    ``lever`` converts a ramp into a displacement at the recombining splitter.
    A positive ramp is a positive (lab-frame) rotation of the mirror.
    """

    name: str
    freq: int
    g0: float = 1e-3
    phase: float = 0.0
    lever: float = 1.0

    def __post_init__(self):
        if self.name not in MIRRORS:
            raise InvalidNetwork(f"unknown mirror {self.name!r}; expected one of {MIRRORS}")
        if isinstance(self.freq, bool) or int(self.freq) != self.freq or self.freq < 1:
            raise InvalidNetwork(f"drive {self.name}: freq must be an integer >= 1, got {self.freq!r}")
        object.__setattr__(self, "freq", int(self.freq))
        if not math.isfinite(self.g0) or self.g0 < 0:
            raise InvalidNetwork(f"drive {self.name}: g0 must be finite and >= 0, got {self.g0!r}")
        if not (math.isfinite(self.phase) and math.isfinite(self.lever)):
            raise InvalidNetwork(f"drive {self.name}: phase and lever must be finite")
        if self.g0 > WEAK_G0:
            warnings.warn(
                f"drive {self.name}: g0={self.g0} is outside the weak regime (> {WEAK_G0})",
                stacklevel=3,
            )

    def ramp(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.g0 * np.sin(2.0 * np.pi * self.freq * t + self.phase)

    def displacement(self, t) -> np.ndarray:
        return self.lever * self.ramp(t)


@dataclass(frozen=True)
class NetworkSpec:
    outer_T: float = 2.0 / 3.0
    inner_T1: float = 0.5
    inner_T2: float = 0.5
    inner_phase: float = 0.0
    outer_phase: float = -math.pi
    block_c: bool = False
    leak_eps: float = 0.0
    drives: tuple[MirrorDrive, ...] = field(default_factory=tuple)

    def drive(self, name: str) -> MirrorDrive | None:
        for d in self.drives:
            if d.name == name:
                return d
        return None

    def without_drives(self) -> "NetworkSpec":
        return replace(self, drives=())

    def elements(self) -> list:
        return _elements(self)

    def dark_port_amplitude(self) -> complex:
        """Static amplitude emerging from the inner interferometer toward F."""
        _, snaps = propagate(self.elements(), source_amplitudes(), AMPLITUDES)
        return snaps["F"]


def build_network(
    outer_T: float = 2.0 / 3.0,
    inner_T1: float = 0.5,
    inner_T2: float = 0.5,
    inner_phase: float = 0.0,
    outer_phase: float = -math.pi,
    block_c: bool = False,
    leak_eps: float = 0.0,
    drives: Iterable[MirrorDrive] = (),
    n_samples: int = DEFAULT_N_SAMPLES,
) -> NetworkSpec:
    """Validate parameters and assemble a :class:`NetworkSpec`.

    Defaults give a 1/3 : 2/3 outer split and a
    balanced inner interferometer tuned dark toward F.
    """
    for name, T in (("outer_T", outer_T), ("inner_T1", inner_T1), ("inner_T2", inner_T2)):
        try:
            BeamSplitter(float(T))
        except InvalidNetwork as exc:
            raise InvalidNetwork(f"{name}: {exc}") from None
    drives = tuple(drives)
    names = [d.name for d in drives]
    if len(set(names)) != len(names):
        raise InvalidNetwork(f"duplicate mirror drives: {names}")
    nyquist = n_samples // 2
    for d in drives:
        if d.freq >= nyquist:
            raise InvalidNetwork(
                f"drive {d.name}: freq {d.freq} at/above Nyquist ({nyquist}) for {n_samples} samples"
            )
    for name, v in (("inner_phase", inner_phase), ("outer_phase", outer_phase), ("leak_eps", leak_eps)):
        if not math.isfinite(v):
            raise InvalidNetwork(f"{name} must be finite")
    net = NetworkSpec(
        outer_T=float(outer_T),
        inner_T1=float(inner_T1),
        inner_T2=float(inner_T2),
        inner_phase=float(inner_phase),
        outer_phase=float(outer_phase),
        block_c=bool(block_c),
        leak_eps=float(leak_eps),
        drives=drives,
    )
    _leak_rotation(net)  # range check on leak_eps
    return net


# --- element walk -----------------------------------------------------------


@dataclass(frozen=True)
class TwoPort:
    """Unitary 2x2 element. ``flips[i][j]`` marks reflections (transverse mirror image)."""

    ins: tuple[str, str]
    outs: tuple[str, str]
    matrix: np.ndarray
    flips: tuple[tuple[bool, bool], tuple[bool, bool]] = ((False, True), (True, False))
    tag: str = ""


@dataclass(frozen=True)
class Phase:
    leg: str
    phi: float


@dataclass(frozen=True)
class Mirror:
    leg: str
    label: str
    blocked: bool = False


class AmplitudeAlgebra:
    """Leg values are complex amplitudes; geometry is ignored."""

    def zero(self):
        return 0j

    def combine(self, terms):
        return sum((c * v for c, v, _ in terms), 0j)

    def mirror(self, value, element: Mirror):
        return 0j if element.blocked else value


AMPLITUDES = AmplitudeAlgebra()


@dataclass(frozen=True)
class Beam:
    """One Gaussian beam: complex amplitude plus transverse ramp and displacement.

    ``g`` and ``d`` are floats or arrays over time samples.
    """

    amp: complex
    g: object = 0.0
    d: object = 0.0

    def flipped(self) -> "Beam":
        return Beam(self.amp, -self.g, -self.d)


class BeamAlgebra:
    """Leg values are tuples of :class:`Beam`; reflections mirror the transverse axis.

    ``tilts`` maps a mirror label to its instantaneous ``(g, d)``.
    """

    def __init__(self, tilts: dict[str, tuple[object, object]] | None = None):
        self.tilts = tilts or {}

    def zero(self):
        return ()

    def combine(self, terms):
        out = []
        for c, beams, flip in terms:
            if c == 0:
                continue
            for b in beams:
                b = b.flipped() if flip else b
                out.append(Beam(c * b.amp, b.g, b.d))
        return tuple(out)

    def mirror(self, beams, element: Mirror):
        if element.blocked:
            return ()
        g, d = self.tilts.get(element.label, (0.0, 0.0))
        out = []
        for b in beams:
            # exp(i g x) f(x - d) applied to exp(i g1 x) u(x - d1) leaves exp(-i g1 d)
            g1, d1 = -b.g, -b.d
            amp = b.amp * np.exp(-1j * np.multiply(g1, d)) if np.any(d) and np.any(g1) else b.amp
            out.append(Beam(amp, g1 + g, d1 + d))
        return tuple(out)


def source_amplitudes() -> dict[str, complex]:
    return {"src": 1.0 + 0j, "aux1": 0j, "aux2": 0j}


def _leak_rotation(net: NetworkSpec) -> TwoPort | None:
    if net.leak_eps == 0.0:
        return None
    vals, _ = propagate(_elements(net, with_leak=False), source_amplitudes(), AMPLITUDES, stop_after="BS3")
    x0 = vals["X"]
    if abs(x0) <= abs(net.leak_eps):
        raise InvalidNetwork(
            f"leak_eps={net.leak_eps} exceeds the available inner-exit amplitude {abs(x0):.6g}"
        )
    s = net.leak_eps / abs(x0)
    c = math.sqrt(1.0 - s * s)
    u = np.conj(x0) / abs(x0)
    m = np.array([[c, s * u], [-s * np.conj(u), c]], dtype=complex)
    return TwoPort(("f_arm", "X"), ("f_arm", "X"), m, ((False, False), (False, False)))


def _elements(net: NetworkSpec, with_leak: bool = True) -> list:
    bs_outer = BeamSplitter(net.outer_T).matrix
    els: list = [
        TwoPort(("src", "aux1"), ("inner", "c_arm"), bs_outer),
        Mirror("inner", "E"),
        TwoPort(("inner", "aux2"), ("a_arm", "b_arm"), BeamSplitter(net.inner_T1).matrix),
        Phase("a_arm", net.inner_phase / 2),
        Mirror("a_arm", "A"),
        Phase("a_arm", net.inner_phase / 2),
        Mirror("b_arm", "B"),
        Phase("c_arm", net.outer_phase / 2),
        Mirror("c_arm", "C", blocked=net.block_c),
        Phase("c_arm", net.outer_phase / 2),
        TwoPort(("a_arm", "b_arm"), ("f_arm", "X"), BeamSplitter(net.inner_T2).matrix, tag="BS3"),
    ]
    if with_leak:
        rot = _leak_rotation(net)
        if rot is not None:
            els.append(rot)
    els += [
        Mirror("f_arm", "F"),
        TwoPort(("f_arm", "c_arm"), ("D", "D2"), bs_outer),
    ]
    return els


def propagate(
    elements: Sequence,
    values: dict,
    algebra=AMPLITUDES,
    adjoint: bool = False,
    stop_after: str | None = None,
) -> tuple[dict, dict]:
    """Push leg values through ``elements``; return final legs and mirror snapshots.

    With ``adjoint=True`` the elements are applied as their conjugate
    transposes in reverse order, starting from output-port values.
    """
    vals = dict(values)
    snaps: dict = {}
    seq = list(reversed(elements)) if adjoint else list(elements)
    for el in seq:
        if isinstance(el, TwoPort):
            src, dst = (el.outs, el.ins) if adjoint else (el.ins, el.outs)
            inputs = [vals.pop(k, algebra.zero()) for k in src]
            new = []
            for i in range(2):
                terms = []
                for j in range(2):
                    c = np.conj(el.matrix[j, i]) if adjoint else el.matrix[i, j]
                    flip = el.flips[j][i] if adjoint else el.flips[i][j]
                    terms.append((complex(c), inputs[j], flip))
                new.append(algebra.combine(terms))
            vals.update(zip(dst, new))
            if stop_after is not None and el.tag == stop_after:
                break
        elif isinstance(el, Phase):
            c = np.exp(-1j * el.phi) if adjoint else np.exp(1j * el.phi)
            vals[el.leg] = algebra.combine([(complex(c), vals.get(el.leg, algebra.zero()), False)])
        elif isinstance(el, Mirror):
            # a blocked mirror zeroes its plane in both directions
            vals[el.leg] = algebra.mirror(vals.get(el.leg, algebra.zero()), el)
            snaps[el.label] = vals[el.leg]
        else:  # pragma: no cover
            raise TypeError(f"unknown element {el!r}")
    return vals, snaps


def transfer_matrix(net: NetworkSpec) -> np.ndarray:
    """3x3 matrix from input ports ``INPUT_PORTS`` to output ports ``OUTPUT_PORTS``."""
    els = net.elements()
    cols = []
    for port in INPUT_PORTS:
        vals, _ = propagate(els, {p: (1.0 + 0j if p == port else 0j) for p in INPUT_PORTS})
        cols.append([vals[o] for o in OUTPUT_PORTS])
    return np.array(cols, dtype=complex).T


def mirror_plane_matrix(net: NetworkSpec) -> np.ndarray:
    """3x3 matrix from unit amplitudes at mirror planes A, B, C to the output ports."""
    els = net.elements()
    legs = {"A": "a_arm", "B": "b_arm", "C": "c_arm"}
    cols = []
    for label in PATHS:
        vals, _ = propagate(_after_plane(els, label), {legs[label]: 1.0 + 0j})
        cols.append([vals.get(o, 0j) for o in OUTPUT_PORTS])
    return np.array(cols, dtype=complex).T


def _after_plane(els: list, label: str) -> list:
    """Elements strictly downstream of the mirror ``label`` (plane after the mirror)."""
    for i, el in enumerate(els):
        if isinstance(el, Mirror) and el.label == label:
            return els[i + 1 :]
    raise KeyError(label)


def mirror_orientation(net: NetworkSpec, port: str = "D") -> dict[str, int]:
    """Sign (+1/-1) with which each mirror's tilt arrives at ``port``.

    Counts transverse mirror images between each mirror and the port. Mirrors
    with no path to the port are omitted. Raises if the paths through one
    mirror disagree (cannot happen for this topology).
    """
    out: dict[str, int] = {}
    els = net.elements()
    for m in MIRRORS:
        algebra = BeamAlgebra({m: (1.0, 1.0)})
        vals, _ = propagate(els, {"src": (Beam(1.0 + 0j),), "aux1": (), "aux2": ()}, algebra)
        signs = {int(np.sign(b.g)) for b in vals.get(port, ()) if b.g != 0}
        if len(signs) > 1:
            raise InvalidNetwork(f"inconsistent orientation for mirror {m}")
        if signs:
            out[m] = signs.pop()
    return out
