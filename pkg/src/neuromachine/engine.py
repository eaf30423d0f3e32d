"""Multi-HN timestep executor.

One network step (1 ms) runs, for every hardware neuron (HN):

* Phase A (synapse side): every lane slot reads its presynaptic spike from
  the global spike history (bus latency 1 step plus the per-synapse delay),
  updates short-term and spike-timing plasticity, computes its current and
  the currents are summed into the netsum write buffer in canonical order:
  a pairwise tree across the lanes of a row, then row by row.
* Phase B (soma side): 25 soma substeps per owned neuron, driven by the
  netsum produced in the previous step (compiled kernel, bit-identical to
  ``model_core.hh_step``); the OR of zero crossings is the raw
  spike, which enters the per-neuron delay ring.
* Phase C (barrier): the delayed spikes of all HNs are published as the
  history entry for this step, and the step counter advances.

Phases A and B of different HNs touch disjoint state, so they may run on
worker threads; results do not depend on the number of workers.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .layout import CompiledNetwork, load_image
from .model_core import (
    F32,
    NETWORK_DT,
    NEURON_DT,
    NumericalInstabilityError,
    SomaState,
    decay_factor,
)
from ._kernels import SomaKernel, synapse_pass
from .net_model import NULL_ID, Stimulus

HISTORY_DEPTH = 26
ACDN_DEPTH = 257
CHECKPOINT_VERSION = "nm-ckpt-1"

_ONE = F32(1.0)
_ZERO = F32(0.0)


@dataclass
class ProbeSpec:
    neurons: Sequence[int] = ()
    synapses: Sequence[int] = ()
    cadence: str = "step"  # "step" or "substep"

    def __post_init__(self):
        if self.cadence not in ("step", "substep"):
            raise ValueError(f"cadence must be 'step' or 'substep', not {self.cadence!r}")


def fmt_value(v) -> str:
    return str(F32(v))


@dataclass
class EngineState:
    t: int
    spike_history: np.ndarray  # (26, N+1) bool; column N is the null id, always 0
    acdn_ring: np.ndarray  # (257, N) bool of raw spikes
    netsum: np.ndarray  # (2, N) float32; step t writes [t % 2], reads [(t-1) % 2]
    V: np.ndarray
    m: np.ndarray
    h: np.ndarray
    n: np.ndarray
    y: np.ndarray
    raw: np.ndarray  # raw spike bits of step t-1
    lanes: list[dict[str, np.ndarray]] = field(default_factory=list)

    def copy(self) -> "EngineState":
        return EngineState(self.t, *(a.copy() for a in (
            self.spike_history, self.acdn_ring, self.netsum, self.V, self.m, self.h, self.n,
            self.y, self.raw)), lanes=[{k: v.copy() for k, v in d.items()} for d in self.lanes])

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.array(self.t, np.int64), "spike_history": self.spike_history,
               "acdn_ring": self.acdn_ring, "netsum": self.netsum, "V": self.V, "m": self.m,
               "h": self.h, "n": self.n, "y": self.y, "raw": self.raw}
        for h, d in enumerate(self.lanes):
            for k, v in d.items():
                out[f"hn{h}.{k}"] = v
        return out


SLOT_CONSTANTS = ("f_u", "dx", "f_S", "U", "A", "f_xp", "a_plus", "eta_p", "eta_m", "w_max", "g", "E")
NULL_ROW = 1024


class _HNPlan:
    """Precomputed per-slot constants of one HN (flattened row-major)."""

    def __init__(self, compiled: CompiledNetwork, h: int):
        img = compiled.hns[h]
        N = compiled.n_neurons
        self.lo, self.hi = img.lo, img.hi
        self.p = compiled.params.p
        self.rows = img.rows
        s = img.slots.reshape(-1)
        self.null = s["mm"] == NULL_ID
        pre = s["mm"].astype(np.int64)
        pre[self.null] = N
        acds = s["acds"].astype(np.int64)
        # flat index into the delay-major history view (row d = step t-1-d)
        self.hist_index = (acds * (N + 1) + pre).astype(np.int32)

        # per-attribute constants; row NULL_ROW is all zero so a null slot's
        # zero state is a fixed point
        dt = NETWORK_DT
        self.table = np.zeros((NULL_ROW + 1, len(SLOT_CONSTANTS)), np.float32)
        for k, b in compiled.synapse_attr_sets.items():
            self.table[k] = [
                decay_factor(b.stp.tau_f, dt), dt / F32(b.stp.tau_d), decay_factor(b.stp.tau_s, dt),
                b.stp.U, b.stp.A, decay_factor(b.stdp.tau_plus, dt), b.stdp.a_plus,
                b.stdp.eta_plus, b.stdp.eta_minus, b.stdp.w_max, b.membrane.g_syn, b.membrane.E_syn,
            ]
        self.table[NULL_ROW] = 0
        self.slot_attr = np.where(self.null, NULL_ROW, s["attr"]).astype(np.int32)
        self.w_max = self.table[self.slot_attr, SLOT_CONSTANTS.index("w_max")]

        lay = img.layout
        self.neuron_rows = lay.neuron_rows.astype(np.int64)
        # soma groups: neurons sharing C_m and channel set update together
        nattr = compiled.neurons["attr"][self.lo:self.hi].astype(np.int64)
        n_loc = self.hi - self.lo
        self.f_y = np.zeros(n_loc, np.float32)
        self.a_minus = np.zeros(n_loc, np.float32)
        self.I_bias = np.zeros(n_loc, np.float32)
        by_kind: dict = {}
        for a in np.unique(nattr).tolist():
            na = compiled.neuron_attr_sets[a]
            sel = nattr == a
            self.f_y[sel] = decay_factor(na.tau_minus, dt)
            self.a_minus[sel] = F32(na.a_minus)
            self.I_bias[sel] = F32(na.I_bias)
            by_kind.setdefault((na.C_m, na.channels), (na, []))[1].append(a)
        self.soma_groups = []
        for na, members in by_kind.values():
            idx = np.flatnonzero(np.isin(nattr, members))
            sl = slice(int(idx[0]), int(idx[-1]) + 1) if idx.size == idx[-1] - idx[0] + 1 else idx
            self.soma_groups.append((sl, na))
        self.acdn = compiled.neurons["acdn"][self.lo:self.hi].astype(np.int64)


class Engine:
    """Deterministic executor over a compiled network."""

    def __init__(self, compiled: CompiledNetwork | str | Path, workers: int = 1):
        if not isinstance(compiled, CompiledNetwork):
            compiled = load_image(compiled)
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.compiled = compiled
        self.workers = workers
        self.N = compiled.n_neurons
        self.substeps = compiled.params.substeps
        self.plans = [_HNPlan(compiled, h) for h in range(len(compiled.hns))]
        self.state = self.initial_state(compiled)
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    @staticmethod
    def initial_state(compiled: CompiledNetwork) -> EngineState:
        N = compiled.n_neurons
        nr = compiled.neurons
        lanes = []
        for img in compiled.hns:
            s = img.slots.reshape(-1)
            lanes.append({k: s[k].copy() for k in ("u", "x", "S", "xj", "w")})
        return EngineState(
            t=0,
            spike_history=np.zeros((HISTORY_DEPTH, N + 1), bool),
            acdn_ring=np.zeros((ACDN_DEPTH, N), bool),
            netsum=np.zeros((2, N), np.float32),
            V=nr["V"].copy(), m=nr["m"].copy(), h=nr["h"].copy(), n=nr["n"].copy(),
            y=nr["y"].copy(), raw=np.zeros(N, bool), lanes=lanes,
        )

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # ------------------------------------------------------------ phases

    def nu_read(self, hn: int, lane: int, row: int) -> bool:
        """Presynaptic spike bit seen by one slot at the current step."""
        plan = self.plans[hn]
        k = row * plan.p + lane
        if plan.null[k]:
            return False
        src = self.state.t - 1 - int(self.compiled.hns[hn].slots["acds"].reshape(-1)[k])
        if src < 0:
            return False
        pre = int(self.compiled.hns[hn].slots["mm"].reshape(-1)[k])
        return bool(self.state.spike_history[src % HISTORY_DEPTH, pre])

    def _delay_view(self) -> np.ndarray:
        """History reordered so row d holds step t-1-d; pre-history rows are zero."""
        t = self.state.t
        rows = (t - 1 - np.arange(HISTORY_DEPTH)) % HISTORY_DEPTH
        view = self.state.spike_history[rows]
        if t < HISTORY_DEPTH:
            view[t:] = False
        return view.reshape(-1)

    def _phase_a(self, h: int, hist_flat: np.ndarray) -> None:
        st, plan = self.state, self.plans[h]
        lo, hi = plan.lo, plan.hi
        post_prev = st.raw[lo:hi]
        y = st.y[lo:hi] * plan.f_y
        netsum_w = st.netsum[st.t % 2]
        if plan.rows == 0:
            netsum_w[lo:hi] = _ZERO
            st.y[lo:hi] = np.where(post_prev, y + plan.a_minus, y)
            return
        L = st.lanes[h]
        out = np.empty(hi - lo, np.float32)
        synapse_pass(hist_flat, plan.hist_index, plan.slot_attr, plan.table,
                     L["u"], L["x"], L["S"], L["xj"], L["w"], plan.neuron_rows, plan.p, y, post_prev, st.V[lo:hi], out)
        st.y[lo:hi] = np.where(post_prev, y + plan.a_minus, y)
        netsum_w[lo:hi] = out

    def _phase_b(self, h: int, stim: np.ndarray | None, probe_local=None):
        st, plan = self.state, self.plans[h]
        lo, hi = plan.lo, plan.hi
        netsum_r = st.netsum[(st.t - 1) % 2]
        raw = np.zeros(hi - lo, bool)
        trace = {}
        for sl, na in plan.soma_groups:
            g = slice(lo + sl.start, lo + sl.stop) if isinstance(sl, slice) else sl + lo
            I = netsum_r[g] + plan.I_bias[sl]
            if stim is not None:
                I = I + stim[g]
            V, m, h, n = (a[g].copy() for a in (st.V, st.m, st.h, st.n))
            want = []
            if probe_local:
                pos = {int(i): j for j, i in enumerate(np.arange(hi - lo)[sl])}
                want = [(i, pos[i]) for i in probe_local if i in pos]
            spk, rec = self._kernel(na).run(V, m, h, n, np.ascontiguousarray(I, np.float32),
                                            self.substeps, NEURON_DT, [j for _, j in want])
            for r in rec:
                for (i, _), vals in zip(want, r):
                    trace.setdefault(i, []).append(vals)
            s = SomaState(V, m, h, n)
            bad = ~(np.isfinite(s.V) & np.isfinite(s.m) & np.isfinite(s.h) & np.isfinite(s.n))
            if bad.any():
                ids = np.arange(lo, hi)[sl]
                raise NumericalInstabilityError(np.atleast_1d(ids)[bad], step=st.t)
            st.V[g], st.m[g], st.h[g], st.n[g] = s.V, s.m, s.h, s.n
            raw[sl] = spk
        t = st.t
        st.acdn_ring[t % ACDN_DEPTH, lo:hi] = raw
        published = st.acdn_ring[(t - plan.acdn) % ACDN_DEPTH, np.arange(lo, hi)]
        return raw, published, trace

    def _kernel(self, na) -> SomaKernel:
        cache = self.__dict__.setdefault("_kernels", {})
        if na not in cache:
            cache[na] = SomaKernel(na)
        return cache[na]

    def _hn_job(self, h, hist_flat, stim, probe_local):
        self._phase_a(h, hist_flat)
        return self._phase_b(h, stim, probe_local)

    def axon_exchange(self, published: Sequence[np.ndarray]) -> None:
        """Write every HN's published bits into the history slot of step t."""
        slot = self.state.spike_history[self.state.t % HISTORY_DEPTH]
        for plan, bits in zip(self.plans, published):
            slot[plan.lo:plan.hi] = bits
        slot[self.N] = False

    def step_network(self, stimulus: np.ndarray | None = None, probe_neurons: dict | None = None):
        """Advance one network step; returns (raw spike bits, per-neuron substep traces)."""
        hist_flat = self._delay_view()
        jobs = []
        for h, plan in enumerate(self.plans):
            pl = None
            if probe_neurons:
                pl = [i - plan.lo for i in probe_neurons if plan.lo <= i < plan.hi] or None
            jobs.append((h, hist_flat, stimulus, pl))
        if self._pool is not None:
            results = list(self._pool.map(lambda a: self._hn_job(*a), jobs))
        else:
            results = [self._hn_job(*a) for a in jobs]
        # barrier passed: publish and advance
        self.axon_exchange([r[1] for r in results])
        raw = np.concatenate([r[0] for r in results]) if results else np.zeros(0, bool)
        traces = {}
        for plan, r in zip(self.plans, results):
            for i, v in r[2].items():
                traces[plan.lo + i] = v
        self.state.raw = raw
        self.state.t += 1
        return raw, traces

    # ------------------------------------------------------------ observation

    def synapse_state(self, syn: int) -> dict[str, np.float32]:
        h, row, lane = self._slot_cache(syn)
        k = row * self.compiled.params.p + lane
        return {name: self.state.lanes[h][name][k] for name in ("u", "x", "S", "w")}

    def _slot_cache(self, syn):
        cache = self.__dict__.setdefault("_slots", {})
        if syn not in cache:
            cache[syn] = self.compiled.slot_of_synapse(syn)
        return cache[syn]

    def weights(self) -> tuple[np.ndarray, np.ndarray]:
        """(w, w_max) over all non-null slots, in HN/slot order."""
        ws, wm = [], []
        for plan, L in zip(self.plans, self.state.lanes):
            ws.append(L["w"][~plan.null])
            wm.append(plan.w_max[~plan.null])
        if not ws:
            return np.zeros(0, np.float32), np.zeros(0, np.float32)
        return np.concatenate(ws), np.concatenate(wm)

    def netsums(self) -> np.ndarray:
        """Netsum produced by the most recent step."""
        return self.state.netsum[(self.state.t - 1) % 2]

    # ------------------------------------------------------------ checkpoints

    def save_checkpoint(self, path) -> None:
        buf = io.BytesIO()
        np.savez(buf, version=np.array(CHECKPOINT_VERSION), image=np.array(self.compiled.fingerprint()),
                 **self.state.arrays())
        _atomic_bytes(Path(path), buf.getvalue())

    def load_checkpoint(self, path) -> None:
        with np.load(path, allow_pickle=False) as z:
            if str(z["version"]) != CHECKPOINT_VERSION:
                raise ValueError(f"checkpoint version {z['version']} != {CHECKPOINT_VERSION}")
            if str(z["image"]) != self.compiled.fingerprint():
                raise ValueError("checkpoint was taken from a different compiled network")
            lanes = [{k: z[f"hn{h}.{k}"].copy() for k in ("u", "x", "S", "xj", "w")}
                     for h in range(len(self.plans))]
            self.state = EngineState(int(z["t"]), z["spike_history"].copy(), z["acdn_ring"].copy(),
                                     z["netsum"].copy(), z["V"].copy(), z["m"].copy(), z["h"].copy(),
                                     z["n"].copy(), z["y"].copy(), z["raw"].copy(), lanes)

    # ------------------------------------------------------------ driver

    def run(self, steps: int, probes: ProbeSpec | None = None,
            stimulus: Stimulus | None = None) -> "RunResult":
        result = RunResult()
        sub = probes is not None and probes.cadence == "substep" and probes.neurons
        for _ in range(steps):
            t = self.state.t
            stim = stimulus.current_at(t, self.N) if stimulus else None
            raw, traces = self.step_network(stim, list(probes.neurons) if sub else None)
            result.raster.extend((t, int(i)) for i in np.flatnonzero(raw))
            if probes is not None:
                result.traces.extend(self._trace_lines(t, probes, traces))
        return result

    def _trace_lines(self, t, probes: ProbeSpec, traces) -> list[str]:
        out = []
        if probes.cadence == "substep":
            for s in range(self.substeps):
                for i in probes.neurons:
                    V, m, h, n = traces[i][s]
                    out.append(f"{t},{s},neuron={i},V={fmt_value(V)},m={fmt_value(m)},"
                               f"h={fmt_value(h)},n={fmt_value(n)}")
        else:
            st = self.state
            for i in probes.neurons:
                out.append(f"{t},neuron={i},V={fmt_value(st.V[i])},m={fmt_value(st.m[i])},"
                           f"h={fmt_value(st.h[i])},n={fmt_value(st.n[i])}")
        for k in probes.synapses:
            d = self.synapse_state(k)
            out.append(f"{t},synapse={k}," + ",".join(f"{n}={fmt_value(v)}" for n, v in d.items()))
        return out


@dataclass
class RunResult:
    raster: list[tuple[int, int]] = field(default_factory=list)
    traces: list[str] = field(default_factory=list)


def run(compiled, steps: int, probes: ProbeSpec | None = None, stimulus: Stimulus | None = None,
        workers: int = 1, checkpoint_in=None) -> tuple[RunResult, Engine]:
    """Load (if needed), optionally resume from a checkpoint, and run ``steps`` steps."""
    eng = Engine(compiled, workers=workers)
    if checkpoint_in is not None:
        eng.load_checkpoint(checkpoint_in)
    try:
        res = eng.run(steps, probes, stimulus)
    finally:
        eng.close()
    return res, eng


def _atomic_bytes(path: Path, data: bytes) -> None:
    from .recording import atomic_write_bytes
    atomic_write_bytes(path, data)
