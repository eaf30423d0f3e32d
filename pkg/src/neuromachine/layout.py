"""Synapse lane layout, compiled memory images and the analytic speed model.

Each hardware neuron (HN) owns a contiguous block of neurons.  A neuron's
input synapses are cut into rows of ``p`` (one slot per lane) in
declaration order; the tail of its last row is padded with null slots
whose presynaptic id is ``NULL_ID`` and whose state stays zero.

Image directory layout (all binaries little-endian, row-major)::

    manifest.txt       key = value lines, first line format_version
    attrs.net          attribute tables in the network text format
    neurons.bin        NEURON_DTYPE record per neuron id
    hn000.slots.bin    SLOT_DTYPE record per (row, lane) of HN 0
    hn001.slots.bin    ...
"""

from __future__ import annotations

import hashlib
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model_core import F32, rest_state
from .net_model import (
    NULL_ID,
    NetworkDescription,
    SynapseAttrs,
    parse_network,
    serialize_network,
    validate,
)

IMAGE_VERSION = "nm-image-1"

NEURON_DTYPE = np.dtype([
    ("attr", "<u2"), ("acdn", "<u2"),
    ("V", "<f4"), ("m", "<f4"), ("h", "<f4"), ("n", "<f4"), ("y", "<f4"),
])
SLOT_DTYPE = np.dtype([
    ("mm", "<u4"), ("owner", "<u4"), ("syn", "<i4"), ("attr", "<u2"), ("acds", "u1"), ("pad", "u1"),
    ("u", "<f4"), ("x", "<f4"), ("S", "<f4"), ("xj", "<f4"), ("w", "<f4"),
])


class CompileError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid network:\n  " + "\n  ".join(self.violations))


@dataclass(frozen=True)
class CompileParams:
    n_hn: int = 1
    p: int = 2
    clock_hz: float = 300e6
    substeps: int = 25

    def __post_init__(self):
        if self.n_hn < 1:
            raise ValueError("n_hn must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if not self.clock_hz > 0:
            raise ValueError("clock_hz must be positive")


def partition(n_neurons: int, n_hn: int) -> np.ndarray:
    """Contiguous ceiling split; returns an (n_hn, 2) array of [lo, hi) ranges."""
    if n_hn < 1:
        raise ValueError("n_hn must be >= 1")
    if n_hn > n_neurons:
        raise ValueError(f"n_hn ({n_hn}) exceeds neuron count ({n_neurons})")
    chunk = -(-n_neurons // n_hn)
    lo = np.minimum(np.arange(n_hn) * chunk, n_neurons)
    hi = np.minimum(lo + chunk, n_neurons)
    return np.stack([lo, hi], axis=1)


@dataclass
class LaneLayout:
    """Slot map of one HN: ``slot_syn[row, lane]`` is a synapse index or -1."""

    p: int
    slot_syn: np.ndarray
    neuron_rows: np.ndarray
    row_offset: np.ndarray

    @property
    def rows(self) -> int:
        return self.slot_syn.shape[0]

    @property
    def n_nulls(self) -> int:
        return int((self.slot_syn < 0).sum())

    def lane(self, k: int) -> np.ndarray:
        return self.slot_syn[:, k]


def layout_lanes(groups: Sequence[Sequence[int]], p: int) -> LaneLayout:
    """Pack per-neuron synapse lists (in order) into p lanes.

    Synapse j of local neuron i goes to row row_offset[i] + j // p, lane j % p.
    """
    counts = np.fromiter((len(g) for g in groups), np.int64, len(groups))
    flat = (np.concatenate([np.asarray(g, np.int64) for g in groups])
            if counts.sum() else np.zeros(0, np.int64))
    return _layout_counts(counts, flat, p)


def _layout_counts(counts: np.ndarray, flat_ids: np.ndarray, p: int) -> LaneLayout:
    rows = -(-counts // p)
    offset = np.zeros(len(counts), np.int64)
    if len(counts):
        offset[1:] = np.cumsum(rows)[:-1]
    total = int(rows.sum())
    slot = np.full((total, p), -1, np.int64)
    if flat_ids.size:
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        j = np.arange(flat_ids.size) - starts
        owner = np.repeat(np.arange(len(counts)), counts)
        slot[offset[owner] + j // p, j % p] = flat_ids
    return LaneLayout(p, slot, rows, offset)


@dataclass
class HNImage:
    lo: int
    hi: int
    layout: LaneLayout
    slots: np.ndarray  # SLOT_DTYPE, shape (rows, p)

    @property
    def rows(self) -> int:
        return self.layout.rows


@dataclass
class CompiledNetwork:
    params: CompileParams
    n_neurons: int
    n_synapses: int
    neuron_attr_sets: dict
    synapse_attr_sets: dict[int, SynapseAttrs]
    neurons: np.ndarray  # NEURON_DTYPE, indexed by neuron id
    hns: list[HNImage]

    @property
    def rows_per_lane(self) -> int:
        return max((h.rows for h in self.hns), default=0)

    @property
    def null_slots(self) -> int:
        return sum(h.layout.n_nulls for h in self.hns)

    def slot_of_synapse(self, syn: int) -> tuple[int, int, int]:
        """(hn, row, lane) of a declared synapse."""
        for h, img in enumerate(self.hns):
            hit = np.argwhere(img.slots["syn"] == syn)
            if hit.size:
                return h, int(hit[0, 0]), int(hit[0, 1])
        raise KeyError(f"synapse {syn} not in compiled network")

    def fingerprint(self) -> str:
        d = hashlib.sha256()
        d.update(self.neurons.tobytes())
        for h in self.hns:
            d.update(h.slots.tobytes())
        d.update(repr(self.params).encode())
        return d.hexdigest()[:16]


def build_images(desc: NetworkDescription, params: CompileParams, out_dir=None) -> CompiledNetwork:
    """Validate and compile a description; optionally write the image directory."""
    problems = validate(desc)
    if problems:
        raise CompileError(problems)
    n = desc.n_neurons
    ranges = partition(n, params.n_hn)
    attr, acdn, v0 = desc.neuron_table()

    neurons = np.zeros(n, NEURON_DTYPE)
    neurons["attr"] = attr
    neurons["acdn"] = acdn
    rest = rest_state(v0.astype(np.float32))
    neurons["V"], neurons["m"], neurons["h"], neurons["n"] = rest.V, rest.m, rest.h, rest.n

    order = desc.synapse_order()
    post_sorted = desc.syn_post[order]
    hns = []
    for lo, hi in ranges.tolist():
        a, b = np.searchsorted(post_sorted, [lo, hi])
        ids = order[a:b]
        counts = np.bincount(post_sorted[a:b] - lo, minlength=hi - lo)
        lay = _layout_counts(counts, ids, params.p)
        slots = np.zeros(lay.slot_syn.shape, SLOT_DTYPE)
        real = lay.slot_syn >= 0
        sid = lay.slot_syn[real]
        slots["syn"] = lay.slot_syn
        slots["mm"] = NULL_ID
        slots["mm"][real] = desc.syn_pre[sid]
        slots["owner"] = (lo + np.repeat(np.arange(hi - lo), lay.neuron_rows))[:, None]
        slots["attr"][real] = desc.syn_attr[sid]
        slots["acds"][real] = desc.syn_acds[sid]
        slots["x"][real] = F32(1.0)
        slots["w"][real] = desc.syn_w[sid].astype(np.float32)
        hns.append(HNImage(lo, hi, lay, slots))

    compiled = CompiledNetwork(params, n, desc.n_synapses, dict(desc.neuron_attr_sets),
                               dict(desc.synapse_attr_sets), neurons, hns)
    if out_dir is not None:
        write_image(compiled, out_dir)
    return compiled


def _attr_text(compiled: CompiledNetwork) -> str:
    empty = NetworkDescription(0, compiled.neuron_attr_sets, compiled.synapse_attr_sets,
                               [], [], [], [], [], [], [], [], [])
    return serialize_network(empty)


def write_image(compiled: CompiledNetwork, out_dir) -> None:
    """Write the image directory atomically (staged, then renamed into place)."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    if out_dir.exists() and any(out_dir.iterdir()) and not (out_dir / "manifest.txt").exists():
        raise ImageError(f"{out_dir} exists and is not an image directory; refusing to replace it")
    stage = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(stage, 0o777 & ~umask)
    try:
        files = {"attrs.net": _attr_text(compiled).encode(), "neurons.bin": compiled.neurons.tobytes()}
        for h, img in enumerate(compiled.hns):
            files[f"hn{h:03d}.slots.bin"] = img.slots.tobytes()
        pr = compiled.params
        lines = [
            f"format_version = {IMAGE_VERSION}",
            f"n_neurons = {compiled.n_neurons}",
            f"n_synapses = {compiled.n_synapses}",
            f"n_hn = {pr.n_hn}",
            f"p = {pr.p}",
            f"clock_hz = {pr.clock_hz!r}",
            f"substeps = {pr.substeps}",
            f"rows_per_lane = {compiled.rows_per_lane}",
            f"null_slots = {compiled.null_slots}",
        ]
        for h, img in enumerate(compiled.hns):
            lines.append(f"hn.{h} = {img.lo} {img.hi} {img.rows} {img.layout.n_nulls}")
        for name in sorted(files):
            lines.append(f"sha256.{name} = {hashlib.sha256(files[name]).hexdigest()}")
        files["manifest.txt"] = ("\n".join(lines) + "\n").encode()
        for name, data in files.items():
            (stage / name).write_bytes(data)
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(stage, out_dir)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


class ImageError(ValueError):
    pass


def load_image(path) -> CompiledNetwork:
    path = Path(path)
    man = read_manifest(path / "manifest.txt")
    if man.get("format_version") != IMAGE_VERSION:
        raise ImageError(f"image version {man.get('format_version')!r} != {IMAGE_VERSION!r}")
    for key, digest in man.items():
        if key.startswith("sha256."):
            data = (path / key[len("sha256."):]).read_bytes()
            if hashlib.sha256(data).hexdigest() != digest:
                raise ImageError(f"checksum mismatch for {key[len('sha256.'):]}")
    params = CompileParams(int(man["n_hn"]), int(man["p"]), float(man["clock_hz"]), int(man["substeps"]))
    attrs = parse_network((path / "attrs.net").read_text())
    neurons = np.fromfile(path / "neurons.bin", NEURON_DTYPE)
    hns = []
    for h in range(params.n_hn):
        lo, hi, rows, _ = (int(v) for v in man[f"hn.{h}"].split())
        slots = np.fromfile(path / f"hn{h:03d}.slots.bin", SLOT_DTYPE).reshape(rows, params.p)
        neuron_rows = np.bincount(slots["owner"][:, 0].astype(np.int64) - lo, minlength=hi - lo) \
            if rows else np.zeros(hi - lo, np.int64)
        offset = np.zeros(hi - lo, np.int64)
        if hi > lo:
            offset[1:] = np.cumsum(neuron_rows)[:-1]
        lay = LaneLayout(params.p, slots["syn"].astype(np.int64), neuron_rows, offset)
        hns.append(HNImage(lo, hi, lay, slots))
    return CompiledNetwork(params, int(man["n_neurons"]), int(man["n_synapses"]),
                           attrs.neuron_attr_sets, attrs.synapse_attr_sets, neurons, hns)


def perf_estimate(n_neurons: int, n_synapses: int, params: CompileParams,
                  dt_network: float = 1.0, compiled: CompiledNetwork | None = None) -> float:
    """Wall-clock seconds per model second for the pipelined machine.

    Each network step costs max(soma clocks, synapse-row clocks): the soma
    unit needs substeps * neurons-per-HN clocks and each lane one clock per
    row.  With ``compiled`` the exact longest lane is used instead of the
    even-spread ceiling.
    """
    neuron_clocks, row_clocks = clock_breakdown(n_neurons, n_synapses, params)
    if compiled is not None:
        neuron_clocks = params.substeps * max(h.hi - h.lo for h in compiled.hns)
        row_clocks = compiled.rows_per_lane
    clocks = max(neuron_clocks, row_clocks)
    return clocks / (params.clock_hz * dt_network * 1e-3)


def clock_breakdown(n_neurons: int, n_synapses: int, params: CompileParams) -> tuple[int, int]:
    """(soma clocks, synapse-row clocks) per network step under even spread."""
    return (params.substeps * math.ceil(n_neurons / params.n_hn),
            math.ceil(n_synapses / (params.n_hn * params.p)))
