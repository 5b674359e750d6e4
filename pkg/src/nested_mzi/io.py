"""CSV and JSON emission. Doubles are written with 17 significant digits."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .field import TimeSeries
from .spectra import SpectrumReport

SPECTRUM_HEADER = ("freq_cycles", "q_power", "p_power")
TIMESERIES_HEADER = ("t", "q", "p")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_spectrum_csv(path, report: SpectrumReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for f, q, p in zip(report.freqs, report.q_power, report.p_power):
            w.writerow((int(f), fmt(q), fmt(p)))


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != SPECTRUM_HEADER:
        raise ValueError(f"unexpected header {rows[0]}")
    data = rows[1:]
    return (
        np.array([int(r[0]) for r in data]),
        np.array([float(r[1]) for r in data]),
        np.array([float(r[2]) for r in data]),
    )


def write_timeseries_csv(path, ts: TimeSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        for t, q, p in zip(ts.t, ts.q, ts.p):
            w.writerow((fmt(t), fmt(q), fmt(p)))


def write_report_json(path, report_dict: dict) -> None:
    Path(path).write_text(json.dumps(report_dict, indent=2, allow_nan=True) + "\n")
