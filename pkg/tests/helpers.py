"""Small hand-built networks shared by the engine, oracle and acceptance tests."""

import math

import numpy as np
from scipy.optimize import brentq

from neuromachine.layout import CompileParams, build_images
from neuromachine.model_core import (
    F32,
    NeuronAttrs,
    StdpAttrs,
    StpAttrs,
    SynapseMembraneAttrs,
    detect_spike,
    hh_step,
    rest_state,
)
from neuromachine.net_model import NULL_ID, NetworkDescription, Stimulus, SynapseAttrs

QUIET = NeuronAttrs(I_bias=0.0)
EXCITATORY = SynapseAttrs(StpAttrs(U=0.2, A=1.0, tau_f=100.0, tau_d=200.0, tau_s=5.0),
                          StdpAttrs(), SynapseMembraneAttrs(g_syn=0.5, E_syn=0.0))

# two strong steps are enough for exactly one presynaptic spike
KICK = Stimulus([(2, 0, 40.0), (3, 0, 40.0)])


def pair_net(d_n, d_s, w=0.5):
    """Neuron 0 -> neuron 1 through one excitatory synapse."""
    return NetworkDescription(2, {0: QUIET}, {0: EXCITATORY}, [0, 1], [0, 0], [d_n, 0], [np.nan, np.nan],
                              [1], [0], [0], [d_s], [w])


def fanout_net(n, src, n_hn):
    """n quiet neurons; ``src`` feeds every other neuron with zero delay."""
    targets = [i for i in range(n) if i != src]
    return NetworkDescription(n, {0: QUIET}, {0: EXCITATORY}, range(n), [0] * n, [0] * n, [np.nan] * n,
                              targets, [src] * len(targets), [0] * len(targets), [0] * len(targets),
                              [0.5] * len(targets))


def first_spike(raster, neuron):
    return min(t for t, i in raster if i == neuron)


def delay_probe(engine_cls, d_n, d_s, n_hn=1, p=2):
    """Run the pair net and return (T, first step whose update moved u, first step reading a nonzero netsum)."""
    desc = pair_net(d_n, d_s)
    eng = engine_cls(build_images(desc, CompileParams(n_hn=n_hn, p=p)))
    steps = 10 + d_n + d_s
    raster, first_u, first_read = [], None, None
    for t in range(steps):
        if first_read is None and eng.state.netsum[(t - 1) % 2][1] != 0:
            first_read = t
        raw, _ = eng.step_network(KICK.current_at(t, 2))
        raster.extend((t, int(i)) for i in np.flatnonzero(raw))
        if first_u is None and eng.synapse_state(0)["u"] != 0:
            first_u = t
    eng.close()
    return first_spike(raster, 0), first_u, first_read


def engine_state(eng):
    """Engine state in the oracle's layout: per-neuron arrays plus per-synapse
    arrays indexed by declaration order."""
    st = eng.state
    n_syn = eng.compiled.n_synapses
    out = {k: getattr(st, k) for k in ("V", "m", "h", "n", "y", "raw")}
    out["netsum"] = eng.netsums()
    for k in ("u", "x", "S", "xj", "w"):
        out[k] = np.zeros(n_syn, np.float32)
    for img, lanes in zip(eng.compiled.hns, st.lanes):
        syn = img.slots["syn"].reshape(-1)
        real = syn >= 0
        for k in ("u", "x", "S", "xj", "w"):
            out[k][syn[real]] = lanes[k][real]
    return out


# spike count of one classical neuron at 10 uA/cm^2 over 1000 ms, locked from
# the reference simulator (an independent float64 integration agrees)
SPIKES_10UA_1S = 69


def _rates64(V):
    am = 0.1 * (V + 40) / (1 - math.exp(-(V + 40) / 10))
    bm = 4 * math.exp(-(V + 65) / 18)
    ah = 0.07 * math.exp(-(V + 65) / 20)
    bh = 1 / (1 + math.exp(-(V + 35) / 10))
    an = 0.01 * (V + 55) / (1 - math.exp(-(V + 55) / 10))
    bn = 0.125 * math.exp(-(V + 65) / 80)
    return am, bm, ah, bh, an, bn


def rest_fixed_point() -> float:
    """Zero of the total ionic current with gates at steady state, in float64."""
    def net(V):
        am, bm, ah, bh, an, bn = _rates64(V)
        m, h, n = am / (am + bm), ah / (ah + bh), an / (an + bn)
        return 120 * m**3 * h * (V - 50) + 36 * n**4 * (V + 77) + 0.3 * (V + 54.387)
    return brentq(net, -80.3, -60.1, xtol=1e-12)


def iterate_soma(V0, I, n_substeps, attrs=NeuronAttrs()):
    s = rest_state(np.atleast_1d(F32(V0)))
    spikes = []
    for k in range(n_substeps):
        prev = s.V
        s = hh_step(s, attrs, I)
        if detect_spike(prev, s.V)[0]:
            spikes.append(k)
    return s, spikes


def ulp_distance(a, b) -> int:
    ia = int(np.array(a, np.float32).view(np.int32))
    ib = int(np.array(b, np.float32).view(np.int32))
    return abs(ia - ib)


def check_compiled(desc, c):
    """Bijection, null accounting and lane balance of a compiled network."""
    seen = np.zeros(desc.n_synapses, np.int64)
    for h in c.hns:
        slots = h.slots
        assert slots.shape == (h.rows, c.params.p)  # every lane has the same length
        real = slots["syn"] >= 0
        assert np.all((slots["mm"] == NULL_ID) == ~real)
        sid = slots["syn"][real]
        seen += np.bincount(sid, minlength=desc.n_synapses)
        assert np.all(slots["mm"][real] == desc.syn_pre[sid])
        assert np.all(slots["owner"][real] == desc.syn_post[sid])
        assert np.all((slots["owner"] >= h.lo) & (slots["owner"] < h.hi))
        counts = np.bincount(desc.syn_post[(desc.syn_post >= h.lo) & (desc.syn_post < h.hi)] - h.lo,
                             minlength=h.hi - h.lo)
        p = c.params.p
        assert int((~real).sum()) == int((p * -(-counts // p) - counts).sum())
        for f in ("u", "S", "xj", "w", "x"):
            assert np.all(slots[f][~real] == 0)
    assert np.all(seen == 1)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LOG = []
