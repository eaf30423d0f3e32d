"""Run output files: spike rasters, probe traces, weight histograms.

All writers go through a temp file in the target directory followed by an
atomic rename, so an interrupted run never leaves a truncated file behind.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

RASTER_HEADER = "timestep,neuron_id"
HIST_BINS = 64

_UMASK = os.umask(0)
os.umask(_UMASK)


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def format_raster(raster: Iterable[tuple[int, int]]) -> str:
    lines = [RASTER_HEADER] + [f"{t},{i}" for t, i in sorted(raster)]
    return "\n".join(lines) + "\n"


def parse_raster(text: str) -> list[tuple[int, int]]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line == RASTER_HEADER:
            continue
        t, i = line.split(",")
        out.append((int(t), int(i)))
    return out


def format_traces(lines: Iterable[str]) -> str:
    lines = list(lines)
    return "\n".join(lines) + "\n" if lines else ""


def parse_trace_line(line: str) -> tuple[tuple, dict[str, float]]:
    """Split a trace line into (key, values); the key is every field that
    is not a state value (timestep, substep, neuron=/synapse= target)."""
    key, vals = [], {}
    for part in line.strip().split(","):
        if "=" in part:
            k, v = part.split("=", 1)
            if k in ("neuron", "synapse"):
                key.append(part)
            else:
                vals[k] = float(v)
        else:
            key.append(part)
    return tuple(key), vals


def weight_histogram(w: np.ndarray, w_max: np.ndarray, bins: int = HIST_BINS) -> np.ndarray:
    """Counts of w / w_max over ``bins`` uniform bins on [0, 1]; 1.0 lands in the last bin."""
    if w.size == 0:
        return np.zeros(bins, np.int64)
    r = np.divide(w.astype(np.float64), w_max.astype(np.float64),
                  out=np.zeros(w.size), where=w_max > 0)
    idx = np.clip((r * bins).astype(np.int64), 0, bins - 1)
    return np.bincount(idx, minlength=bins)


def format_histogram(counts: np.ndarray) -> str:
    bins = len(counts)
    lines = ["bin_lo,bin_hi,count"]
    for k, c in enumerate(counts.tolist()):
        lines.append(f"{k / bins!r},{(k + 1) / bins!r},{c}")
    return "\n".join(lines) + "\n"
