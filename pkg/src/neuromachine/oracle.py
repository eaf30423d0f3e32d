"""Dense single-threaded reference simulator and run comparison.

Works from the NetworkDescription, never from a compiled image: synapses
are kept in grouped declaration order, spike histories are kept in full
(one row per step, no rings) and netsums are reduced through a dense
(neuron, row, lane) tensor.  Per-element arithmetic uses the model_core
kernels, so in exact mode the result matches the engine bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import CompileParams, CompileError
from .model_core import (
    NETWORK_DT,
    NEURON_DT,
    NeuronAttrs,
    NumericalInstabilityError,
    SomaState,
    StdpAttrs,
    StpAttrs,
    StpState,
    SynapseMembraneAttrs,
    detect_spike,
    hh_step,
    post_trace_step,
    rest_state,
    stdp_step,
    stp_step,
    synaptic_current,
)
from .net_model import NetworkDescription, Stimulus, resolve_attrs, validate
from .recording import parse_trace_line


@dataclass
class OracleConfig:
    match_mode: str = "exact"  # "exact" or "tolerant"

    def __post_init__(self):
        if self.match_mode not in ("exact", "tolerant"):
            raise ValueError(f"unknown match mode {self.match_mode!r}")


@dataclass
class OracleResult:
    raster: list[tuple[int, int]]
    traces: list[str]
    state: dict[str, np.ndarray]
    netsum_history: list[np.ndarray] = field(default_factory=list)


def _gather(desc, attr_idx, getter):
    table = {k: np.float32(getter(resolve_attrs(desc, k))) for k in np.unique(attr_idx).tolist()}
    out = np.zeros(len(attr_idx), np.float32)
    for k, v in table.items():
        out[attr_idx == k] = v
    return out


def canonical_netsum(currents, post, n_neurons: int, p: int) -> np.ndarray:
    """Sum per-neuron currents given in per-neuron declaration order.

    Dense (neuron, row, lane) tensor, zero padded; each row is summed as a
    pairwise tree over lanes, rows are then added one by one from 0.0.
    """
    counts = np.bincount(post, minlength=n_neurons)
    rows = -(-counts // p)
    R = int(rows.max()) if n_neurons and rows.size else 0
    out = np.zeros(n_neurons, np.float32)
    if R == 0:
        return out
    start = np.cumsum(counts) - counts
    j = np.arange(len(post)) - start[post]
    dense = np.zeros((n_neurons, R, p), np.float32)
    dense[post, j // p, j % p] = currents
    level = [dense[:, :, k] for k in range(p)]
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    row_sums = level[0]
    for r in range(R):
        out = np.where(r < rows, out + row_sums[:, r], out)
    return out


def reversed_netsum(currents, post, n_neurons: int) -> np.ndarray:
    """Plain sequential sum per neuron, last declared synapse first."""
    counts = np.bincount(post, minlength=n_neurons)
    out = np.zeros(n_neurons, np.float32)
    if not len(post):
        return out
    start = np.cumsum(counts) - counts
    j = np.arange(len(post)) - start[post]
    K = int(counts.max())
    dense = np.zeros((n_neurons, K), np.float32)
    dense[post, counts[post] - 1 - j] = currents
    for k in range(K):
        out = np.where(k < counts, out + dense[:, k], out)
    return out


def oracle_run(desc: NetworkDescription, params: CompileParams, steps: int,
               stimulus: Stimulus | None = None, probes=None,
               config: OracleConfig | None = None, keep_netsums: bool = False) -> OracleResult:
    """Simulate ``steps`` network steps straight from the description."""
    config = config or OracleConfig()
    problems = validate(desc)
    if problems:
        raise CompileError(problems)
    N = desc.n_neurons
    p = params.p
    nattr, acdn, v0 = desc.neuron_table()

    order = desc.synapse_order()
    post = desc.syn_post[order]
    pre = desc.syn_pre[order]
    acds = desc.syn_acds[order]
    sattr = desc.syn_attr[order]
    syn_pos = np.empty(desc.n_synapses, np.int64)
    syn_pos[order] = np.arange(desc.n_synapses)

    stp_attrs = StpAttrs(*(_gather(desc, sattr, lambda b, f=f: getattr(b.stp, f))
                           for f in ("U", "A", "tau_f", "tau_d", "tau_s")))
    stdp_attrs = StdpAttrs(*(_gather(desc, sattr, lambda b, f=f: getattr(b.stdp, f))
                             for f in ("tau_plus", "a_plus", "eta_plus", "eta_minus", "w_max")))
    mem_attrs = SynapseMembraneAttrs(_gather(desc, sattr, lambda b: b.membrane.g_syn),
                                     _gather(desc, sattr, lambda b: b.membrane.E_syn))
    n_sets = desc.neuron_attr_sets
    tau_minus = np.array([n_sets[a].tau_minus for a in nattr.tolist()], np.float32)
    a_minus = np.array([n_sets[a].a_minus for a in nattr.tolist()], np.float32)
    per_neuron = NeuronAttrs(tau_minus=tau_minus, a_minus=a_minus)
    per_syn_neuron = NeuronAttrs(tau_minus=tau_minus[post], a_minus=a_minus[post])
    I_bias = np.array([n_sets[a].I_bias for a in nattr.tolist()], np.float32)
    by_kind: dict = {}
    for a in np.unique(nattr).tolist():
        na = n_sets[a]
        by_kind.setdefault((na.C_m, na.channels), (na, []))[1].append(a)
    groups = [(np.flatnonzero(np.isin(nattr, members)), na) for na, members in by_kind.values()]

    soma = rest_state(v0.astype(np.float32))
    V, m, h, n = (np.array(a, np.float32) for a in (soma.V, soma.m, soma.h, soma.n))
    y = np.zeros(N, np.float32)
    stp = StpState(np.zeros(len(post), np.float32), np.ones(len(post), np.float32),
                   np.zeros(len(post), np.float32))
    xj = np.zeros(len(post), np.float32)
    w = desc.syn_w[order].astype(np.float32)
    netsum_prev = np.zeros(N, np.float32)

    raw_hist = np.zeros((steps, N), bool)
    pub_hist = np.zeros((steps, N), bool)
    raster: list[tuple[int, int]] = []
    traces: list[str] = []
    netsums = []
    neuron_ids = np.arange(N)

    for t in range(steps):
        # synapse side
        src = t - 1 - acds
        pre_spike = np.zeros(len(post), bool)
        ok = src >= 0
        pre_spike[ok] = pub_hist[src[ok], pre[ok]]
        post_now = raw_hist[t - 1] if t >= 1 else np.zeros(N, bool)
        stp = stp_step(stp, stp_attrs, pre_spike, NETWORK_DT)
        xj, _, w = stdp_step(xj, y[post], w, stdp_attrs, per_syn_neuron, pre_spike, post_now[post],
                             NETWORK_DT)
        y = post_trace_step(y, per_neuron, post_now, NETWORK_DT)
        cur = synaptic_current(stp.S, w, mem_attrs, V[post])
        if config.match_mode == "exact":
            netsum = canonical_netsum(cur, post, N, p)
        else:
            netsum = reversed_netsum(cur, post, N)
        if keep_netsums:
            netsums.append(netsum)

        # soma side, driven by the previous step's netsum
        stim = stimulus.current_at(t, N) if stimulus else None
        raw = np.zeros(N, bool)
        sub_trace = {}
        for idx, na in groups:
            I = netsum_prev[idx] + I_bias[idx]
            if stim is not None:
                I = I + stim[idx]
            s = SomaState(V[idx], m[idx], h[idx], n[idx])
            spk = np.zeros(idx.size, bool)
            for k in range(params.substeps):
                V_prev = s.V
                s = hh_step(s, na, I, NEURON_DT, check=False)
                spk |= detect_spike(V_prev, s.V)
                if probes is not None and probes.cadence == "substep":
                    for i in probes.neurons:
                        hit = np.flatnonzero(idx == i)
                        if hit.size:
                            j = hit[0]
                            sub_trace.setdefault(i, []).append((s.V[j], s.m[j], s.h[j], s.n[j]))
            bad = ~(np.isfinite(s.V) & np.isfinite(s.m) & np.isfinite(s.h) & np.isfinite(s.n))
            if bad.any():
                raise NumericalInstabilityError(idx[bad], step=t)
            V[idx], m[idx], h[idx], n[idx] = s.V, s.m, s.h, s.n
            raw[idx] = spk
        raw_hist[t] = raw
        delayed = t - acdn
        pub = np.zeros(N, bool)
        ok = delayed >= 0
        pub[ok] = raw_hist[delayed[ok], neuron_ids[ok]]
        pub_hist[t] = pub
        netsum_prev = netsum
        raster.extend((t, int(i)) for i in np.flatnonzero(raw))

        if probes is not None:
            traces.extend(_probe_lines(t, probes, params.substeps, sub_trace, V, m, h, n,
                                       stp, w, syn_pos))

    # undo grouping so synapse state is indexed by declaration order
    state = {
        "V": V, "m": m, "h": h, "n": n, "y": y, "netsum": netsum_prev,
        "raw": raw_hist[steps - 1] if steps else np.zeros(N, bool),
        "u": stp.u[syn_pos], "x": stp.x[syn_pos], "S": stp.S[syn_pos],
        "xj": xj[syn_pos], "w": w[syn_pos],
    }
    return OracleResult(raster, traces, state, netsums)


def _probe_lines(t, probes, substeps, sub_trace, V, m, h, n, stp, w, syn_pos):
    from .engine import fmt_value as f
    out = []
    if probes.cadence == "substep":
        for s in range(substeps):
            for i in probes.neurons:
                Vs, ms, hs, ns = sub_trace[i][s]
                out.append(f"{t},{s},neuron={i},V={f(Vs)},m={f(ms)},h={f(hs)},n={f(ns)}")
    else:
        for i in probes.neurons:
            out.append(f"{t},neuron={i},V={f(V[i])},m={f(m[i])},h={f(h[i])},n={f(n[i])}")
    for k in probes.synapses:
        j = syn_pos[k]
        out.append(f"{t},synapse={k},u={f(stp.u[j])},x={f(stp.x[j])},S={f(stp.S[j])},w={f(w[j])}")
    return out


# ---------------------------------------------------------------- comparison

@dataclass
class DiffReport:
    identical: bool
    within_tolerance: bool
    first_divergence: str | None
    max_deviation: float = 0.0

    def __str__(self):
        if self.identical:
            return "identical"
        if self.within_tolerance:
            return f"identical within tolerance (max deviation {self.max_deviation:.6g})"
        return f"divergence: {self.first_divergence} (max deviation {self.max_deviation:.6g})"


class DiffError(ValueError):
    pass


def diff_runs(raster_a, raster_b, traces_a=(), traces_b=(), tolerance: float = 0.0) -> DiffReport:
    """Compare two runs; spike rasters must match exactly, trace values
    within ``tolerance`` (absolute)."""
    traces_a, traces_b = list(traces_a), list(traces_b)
    if len(traces_a) != len(traces_b):
        raise DiffError(f"trace length mismatch ({len(traces_a)} vs {len(traces_b)} lines)")
    ra, rb = sorted(raster_a), sorted(raster_b)
    first = None
    if ra != rb:
        sa, sb = set(ra), set(rb)
        diff = sorted(sa ^ sb)
        t, i = diff[0]
        where = "only in a" if (t, i) in sa else "only in b"
        first = f"raster step {t}, neuron {i} ({where})"

    max_dev = 0.0
    exact = True
    for la, lb in zip(traces_a, traces_b):
        if la == lb:
            continue
        exact = False
        ka, va = parse_trace_line(la)
        kb, vb = parse_trace_line(lb)
        if ka != kb or va.keys() != vb.keys():
            raise DiffError(f"trace records do not line up: {la!r} vs {lb!r}")
        for name in va:
            dev = abs(va[name] - vb[name])
            if dev > max_dev:
                max_dev = dev
            if dev > tolerance and first is None:
                first = f"trace {','.join(ka)} {name}: {va[name]!r} vs {vb[name]!r}"
    identical = ra == rb and exact
    return DiffReport(identical, first is None, first, max_dev)
