"""Transverse-field simulation of the detector plane.

Coordinates are in beam-waist units. Every path carries a unit Gaussian that
picks up a phase ramp ``g`` and a displacement ``d`` from each mirror it
visits; the detector field is the coherent sum over paths, evaluated
stroboscopically at each time sample.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidNetwork, RampUnresolved
from .optics import Beam, BeamAlgebra, NetworkSpec, propagate

MAX_RAMP_PHASE = 0.1  # rad per grid step
DEFAULT_POINTS = 2048
DEFAULT_HALF_WIDTH = 8.0
DEFAULT_SAMPLES = 4096
FIELD_PORTS = ("D", "D2", "X", "F")


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    n_points: int = DEFAULT_POINTS
    half_width: float = DEFAULT_HALF_WIDTH

    def __post_init__(self):
        if not _is_pow2(int(self.n_points)) or int(self.n_points) < 8:
            raise ValueError(f"n_points must be a power of two >= 8, got {self.n_points}")
        if not self.half_width >= 6.0:
            raise ValueError(f"half_width must be >= 6 waists, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def x(self) -> np.ndarray:
        return _axes(self.n_points, self.half_width)[0]

    @property
    def k(self) -> np.ndarray:
        return _axes(self.n_points, self.half_width)[1]

    def refined(self) -> "Grid":
        return Grid(2 * self.n_points, self.half_width)


@lru_cache(maxsize=16)
def _axes(n: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    h = 2.0 * half_width / n
    x = -half_width + h * np.arange(n)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    x.setflags(write=False)
    k.setflags(write=False)
    return x, k


@lru_cache(maxsize=16)
def quad_weights(n: int, half_width: float) -> np.ndarray:
    """Weights ``w`` with ``w @ I`` = integral of sign(x)*I(x) for band-limited periodic I.

    Exact for any intensity that is resolved by the grid, so the quad signal
    carries no discretisation error from the sign discontinuity at x = 0.
    """
    x, k = _axes(n, half_width)
    m = np.rint(np.fft.fftfreq(n) * n).astype(int)
    s = np.zeros(n, dtype=complex)
    odd = (m % 2) != 0
    s[odd] = 4j / k[odd]
    w = np.real(np.exp(-1j * np.outer(x, k)) @ s) / n
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class FieldFrame:
    samples: np.ndarray
    grid: Grid
    time_index: int = 0

    @property
    def power(self) -> float:
        return float(self.grid.spacing * np.sum(np.abs(self.samples) ** 2))

    @property
    def quad(self) -> float:
        return quad_signal(self)


@dataclass(frozen=True)
class TimeSeries:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if len(self.q) != len(self.p):
            raise ValueError("q and p must have equal length")

    @property
    def n_samples(self) -> int:
        return len(self.q)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.n_samples


def quad_signal(frame_or_intensity, grid: Grid | None = None):
    """Upper-half minus lower-half power (upper is x > 0).

    Accepts a :class:`FieldFrame` or a real intensity array whose last axis
    lies on ``grid``.
    """
    if isinstance(frame_or_intensity, FieldFrame):
        grid = frame_or_intensity.grid
        intensity = np.abs(frame_or_intensity.samples) ** 2
        return float(intensity @ quad_weights(grid.n_points, grid.half_width))
    return np.asarray(frame_or_intensity) @ quad_weights(grid.n_points, grid.half_width)


@lru_cache(maxsize=16)
def _gaussian(n: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    x, _ = _axes(n, half_width)
    g = (2.0 / np.pi) ** 0.25 * np.exp(-(x**2))
    spec = np.fft.fft(g)
    g.setflags(write=False)
    spec.setflags(write=False)
    return g, spec


def gaussian_mode(grid: Grid) -> FieldFrame:
    """Unit-power Gaussian with unit waist."""
    return FieldFrame(_gaussian(grid.n_points, grid.half_width)[0].astype(complex), grid)


def _check_resolved(grid: Grid, g, d) -> None:
    gmax = float(np.max(np.abs(g))) if np.size(g) else 0.0
    dmax = float(np.max(np.abs(d))) if np.size(d) else 0.0
    if gmax * grid.spacing >= MAX_RAMP_PHASE:
        raise RampUnresolved(
            f"ramp |g|={gmax:.3g} changes phase by {gmax * grid.spacing:.3g} rad per grid step "
            f"(limit {MAX_RAMP_PHASE})"
        )
    if dmax >= grid.half_width / 2:
        raise RampUnresolved(f"displacement |d|={dmax:.3g} exceeds half_width/2={grid.half_width / 2}")


def perturb(frame: FieldFrame, g: float, d: float) -> FieldFrame:
    """Displace by ``d`` (band-limited shift) then imprint the ramp ``exp(i g x)``."""
    grid = frame.grid
    _check_resolved(grid, g, d)
    shifted = np.fft.ifft(np.fft.fft(frame.samples) * np.exp(-1j * grid.k * d))
    return FieldFrame(shifted * np.exp(1j * g * grid.x), grid, frame.time_index)


def render(beams, grid: Grid, n_t: int | None = None) -> np.ndarray:
    """Coherent sum of perturbed Gaussians.

    Returns shape ``(n_t, n_points)`` when ``n_t`` is given, else ``(n_points,)``.
    """
    x, k = _axes(grid.n_points, grid.half_width)
    _, spec = _gaussian(grid.n_points, grid.half_width)
    shape = (n_t, grid.n_points) if n_t is not None else (grid.n_points,)
    out = np.zeros(shape, dtype=complex)
    for b in beams:
        _check_resolved(grid, b.g, b.d)
        g = np.asarray(b.g, dtype=float)
        d = np.asarray(b.d, dtype=float)
        amp = np.asarray(b.amp, dtype=complex)
        if n_t is not None:
            g = np.broadcast_to(g, (n_t,))[:, None]
            d = np.broadcast_to(d, (n_t,))[:, None]
            amp = np.broadcast_to(amp, (n_t,))[:, None]
        if np.all(d == 0):
            base = np.broadcast_to(np.fft.ifft(spec), shape)
        else:
            base = np.fft.ifft(spec * np.exp(-1j * k * d), axis=-1)
        if np.all(g == 0):
            out += amp * base
        else:
            out += amp * base * np.exp(1j * g * x)
    return out


def drive_tilts(net: NetworkSpec, t) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    return {dr.name: (dr.ramp(t), dr.displacement(t)) for dr in net.drives}


def port_beams(net: NetworkSpec, t, tilts=None) -> dict[str, tuple[Beam, ...]]:
    """Beams arriving at each output port and at the dark port F (after mirror F)."""
    algebra = BeamAlgebra(drive_tilts(net, t) if tilts is None else tilts)
    vals, snaps = propagate(net.elements(), {"src": (Beam(1.0 + 0j),), "aux1": (), "aux2": ()}, algebra)
    return {"D": vals["D"], "D2": vals["D2"], "X": vals["X"], "F": snaps["F"]}


def detector_frame(net: NetworkSpec, grid: Grid, t: float = 0.0, port: str = "D", tilts=None) -> FieldFrame:
    """Field at ``port`` for one time sample.

    ``tilts`` overrides the drives with explicit ``{mirror: (g, d)}`` values.
    """
    beams = port_beams(net, float(t), tilts)[port]
    return FieldFrame(render(beams, grid), grid)


def port_fields(net: NetworkSpec, grid: Grid, t, ports=FIELD_PORTS) -> dict[str, np.ndarray]:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    beams = port_beams(net, t)
    return {p: render(beams[p], grid, len(t)) for p in ports}


def _chunk_qp(net, grid, t, port):
    field = port_fields(net, grid, t, (port,))[port]
    intensity = np.abs(field) ** 2
    q = quad_signal(intensity, grid)
    p = grid.spacing * intensity.sum(axis=1)
    return q, p


def run_timeseries(
    net: NetworkSpec,
    grid: Grid | None = None,
    n_samples: int = DEFAULT_SAMPLES,
    port: str = "D",
    chunk: int = 256,
    workers: int = 1,
    noise: float = 0.0,
    seed: int | None = None,
) -> TimeSeries:
    """Quad signal and total power at ``port`` over one analysis window.

    Samples are taken at ``t_k = k / n_samples``. Chunks of samples are
    independent and may be evaluated on ``workers`` threads; for a fixed
    ``chunk`` the result is bit-identical for any worker count. ``noise`` adds seeded white noise to both
    channels and defaults to off.
    """
    grid = grid or Grid()
    if not _is_pow2(n_samples):
        raise ValueError(f"n_samples must be a power of two, got {n_samples}")
    for dr in net.drives:
        if dr.freq >= n_samples // 2:
            raise InvalidNetwork(f"drive {dr.name}: freq {dr.freq} at/above Nyquist for {n_samples} samples")
    t = np.arange(n_samples) / n_samples
    bounds = [(i, min(i + chunk, n_samples)) for i in range(0, n_samples, chunk)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _chunk_qp(net, grid, t[b[0] : b[1]], port), bounds))
    else:
        parts = [_chunk_qp(net, grid, t[a:b], port) for a, b in bounds]
    q = np.concatenate([p[0] for p in parts])
    p = np.concatenate([p[1] for p in parts])
    if noise:
        rng = np.random.default_rng(seed)
        q = q + noise * rng.standard_normal(n_samples)
        p = p + noise * rng.standard_normal(n_samples)
    return TimeSeries(q, p)


def dark_port_power(net: NetworkSpec, grid: Grid | None = None, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Power in the field leaving the inner interferometer toward F, per time sample."""
    grid = grid or Grid()
    t = np.arange(n_samples) / n_samples
    out = []
    for a in range(0, n_samples, 256):
        f = port_fields(net, grid, t[a : a + 256], ("F",))["F"]
        out.append(grid.spacing * np.sum(np.abs(f) ** 2, axis=1))
    return np.concatenate(out)


def erf_quad(d: float) -> float:
    """Quad signal of a unit Gaussian displaced by ``d`` (closed form)."""
    return math.erf(math.sqrt(2.0) * d)
