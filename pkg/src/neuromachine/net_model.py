"""Network description: attribute-set tables, neuron and synapse tables.

Neuron and synapse tables are stored column-wise (numpy arrays in
declaration order) so that networks with millions of synapses stay cheap;
``NeuronDecl``/``SynapseDecl`` records are produced on demand.

Text format (``.net``), one record per line, ``#`` starts a comment::

    [header]
    format = nmnet-1
    n_neurons = 3

    [neuron_attr_sets]
    0 C_m=1 I_bias=0 tau_minus=20 a_minus=1 channels=Na/120/50/m3h1,K/36/-77/n4,L/0.3/-54.387/-

    [synapse_attr_sets]
    0 U=0.2 A=1 tau_f=100 tau_d=200 tau_s=5 tau_plus=20 a_plus=1 eta_plus=0.01 eta_minus=0.01 w_max=1 g_syn=0.1 E_syn=0

    [neurons]
    0 attr=0 acdn=0 V_init=-65

    [synapses]
    post=0 pre=1 attr=0 acds=0 w=0.5

Channel tokens are ``name/g_bar/V_eq/gates`` where ``gates`` is e.g.
``m3h1`` (m cubed times h), ``n4`` or ``-`` for an ungated leak.
``channels=-`` declares a set without ionic channels; omitting the key
gives the classical Na/K/leak set.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from typing import Iterable, Iterator

import numpy as np

from .model_core import (
    CLASSICAL_CHANNELS,
    IonChannelSpec,
    NeuronAttrs,
    StdpAttrs,
    StpAttrs,
    SynapseMembraneAttrs,
)

FORMAT_VERSION = "nmnet-1"
ID_BITS = 24
NULL_ID = (1 << ID_BITS) - 1
ATTR_TABLE_SIZE = 1024
MAX_ACDS = 24
MAX_ACDN = 256
DEFAULT_V_INIT = -65.0
NETWORK_DT_MS = 1.0

SECTIONS = ("header", "neuron_attr_sets", "synapse_attr_sets", "neurons", "synapses")


class NetworkFormatError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        self.msg = msg
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


@dataclass(frozen=True)
class SynapseAttrs:
    """One entry of the synapse attribute-set table."""

    stp: StpAttrs
    stdp: StdpAttrs
    membrane: SynapseMembraneAttrs


@dataclass(frozen=True)
class NeuronDecl:
    id: int
    attr_set: int
    acdn_delay: int = 0
    V_init: float | None = None


@dataclass(frozen=True)
class SynapseDecl:
    post: int
    pre: int
    attr_set: int
    acds_delay: int = 0
    w_init: float = 0.0


def _col(values, dtype):
    return np.ascontiguousarray(np.asarray(values, dtype=dtype))


class NetworkDescription:
    """Immutable network description (after construction)."""

    def __init__(
        self,
        n_neurons: int,
        neuron_attr_sets: dict[int, NeuronAttrs],
        synapse_attr_sets: dict[int, SynapseAttrs],
        neuron_id,
        neuron_attr,
        neuron_acdn,
        neuron_V_init,
        syn_post,
        syn_pre,
        syn_attr,
        syn_acds,
        syn_w,
    ):
        self.n_neurons = int(n_neurons)
        self.neuron_attr_sets = dict(neuron_attr_sets)
        self.synapse_attr_sets = dict(synapse_attr_sets)
        self.neuron_id = _col(neuron_id, np.int64)
        self.neuron_attr = _col(neuron_attr, np.int64)
        self.neuron_acdn = _col(neuron_acdn, np.int64)
        # NaN marks "not given" (default potential)
        self.neuron_V_init = _col(neuron_V_init, np.float64)
        self.syn_post = _col(syn_post, np.int64)
        self.syn_pre = _col(syn_pre, np.int64)
        self.syn_attr = _col(syn_attr, np.int64)
        self.syn_acds = _col(syn_acds, np.int64)
        self.syn_w = _col(syn_w, np.float64)
        for a in (self.neuron_id, self.neuron_attr, self.neuron_acdn, self.neuron_V_init,
                  self.syn_post, self.syn_pre, self.syn_attr, self.syn_acds, self.syn_w):
            a.setflags(write=False)

    @classmethod
    def from_decls(cls, n_neurons, neuron_attr_sets, synapse_attr_sets,
                   neurons: Iterable[NeuronDecl], synapses: Iterable[SynapseDecl]):
        neurons = list(neurons)
        synapses = list(synapses)
        return cls(
            n_neurons, neuron_attr_sets, synapse_attr_sets,
            [d.id for d in neurons], [d.attr_set for d in neurons],
            [d.acdn_delay for d in neurons],
            [np.nan if d.V_init is None else d.V_init for d in neurons],
            [s.post for s in synapses], [s.pre for s in synapses],
            [s.attr_set for s in synapses], [s.acds_delay for s in synapses],
            [s.w_init for s in synapses],
        )

    @property
    def n_synapses(self) -> int:
        return len(self.syn_post)

    def neurons(self) -> Iterator[NeuronDecl]:
        for i, a, d, v in zip(self.neuron_id, self.neuron_attr, self.neuron_acdn, self.neuron_V_init):
            yield NeuronDecl(int(i), int(a), int(d), None if math.isnan(v) else float(v))

    def synapses(self) -> Iterator[SynapseDecl]:
        for k in range(self.n_synapses):
            yield self.synapse(k)

    def synapse(self, k: int) -> SynapseDecl:
        return SynapseDecl(int(self.syn_post[k]), int(self.syn_pre[k]), int(self.syn_attr[k]),
                           int(self.syn_acds[k]), float(self.syn_w[k]))

    def neuron_table(self):
        """Per-neuron (attr_set, acdn_delay, V_init) indexed by neuron id.

        Assumes the description validates (ids 0..n-1 each declared once).
        """
        attr = np.zeros(self.n_neurons, np.int64)
        acdn = np.zeros(self.n_neurons, np.int64)
        v0 = np.full(self.n_neurons, DEFAULT_V_INIT)
        attr[self.neuron_id] = self.neuron_attr
        acdn[self.neuron_id] = self.neuron_acdn
        given = ~np.isnan(self.neuron_V_init)
        v0[self.neuron_id[given]] = self.neuron_V_init[given]
        return attr, acdn, v0

    def synapse_order(self) -> np.ndarray:
        """Synapse indices grouped by postsynaptic neuron, declaration order within."""
        return np.argsort(self.syn_post, kind="stable")

    def __eq__(self, other):
        if not isinstance(other, NetworkDescription):
            return NotImplemented
        cols = ("neuron_id", "neuron_attr", "neuron_acdn", "syn_post", "syn_pre",
                "syn_attr", "syn_acds", "syn_w")
        return (
            self.n_neurons == other.n_neurons
            and self.neuron_attr_sets == other.neuron_attr_sets
            and self.synapse_attr_sets == other.synapse_attr_sets
            and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in cols)
            and np.array_equal(self.neuron_V_init, other.neuron_V_init, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self):
        return (f"NetworkDescription(n_neurons={self.n_neurons}, n_synapses={self.n_synapses}, "
                f"neuron_attr_sets={len(self.neuron_attr_sets)}, "
                f"synapse_attr_sets={len(self.synapse_attr_sets)})")


def resolve_attrs(desc: NetworkDescription, index: int, kind: str = "synapse"):
    """Look up an attribute bundle by its 10-bit index."""
    table = desc.synapse_attr_sets if kind == "synapse" else desc.neuron_attr_sets
    try:
        return table[int(index)]
    except KeyError:
        raise KeyError(f"{kind} attribute set {index} not defined") from None


# ---------------------------------------------------------------- parsing

_NEURON_ATTR_KEYS = ("C_m", "I_bias", "tau_minus", "a_minus", "channels")
_SYN_ATTR_KEYS = {
    "U": "stp", "A": "stp", "tau_f": "stp", "tau_d": "stp", "tau_s": "stp",
    "tau_plus": "stdp", "a_plus": "stdp", "eta_plus": "stdp", "eta_minus": "stdp", "w_max": "stdp",
    "g_syn": "membrane", "E_syn": "membrane",
}
_NEURON_KEYS = ("attr", "acdn", "V_init")
_SYNAPSE_KEYS = ("post", "pre", "attr", "acds", "w")
_GATES_RE = re.compile(r"^(?:([mn])(\d*))?(?:h(\d*))?$")


def _fmt(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def parse_channel(token: str) -> IonChannelSpec:
    parts = token.split("/")
    if len(parts) != 4:
        raise ValueError(f"channel {token!r} must be name/g_bar/V_eq/gates")
    name, g, veq, gates = parts
    act, p, q = "", 0, 0
    if gates != "-":
        m = _GATES_RE.match(gates)
        if not m or not gates:
            raise ValueError(f"bad gate spec {gates!r}")
        if m.group(1):
            act, p = m.group(1), int(m.group(2) or 1)
        if gates.find("h") >= 0:
            q = int(m.group(3) or 1)
    return IonChannelSpec(name, float(g), float(veq), act, p, q)


def format_channel(ch: IonChannelSpec) -> str:
    return f"{ch.name}/{_fmt(ch.g_bar)}/{_fmt(ch.V_eq)}/{ch.gate_kind}"


def _parse_int(v: str, lineno: int, what: str) -> int:
    try:
        return int(v)
    except ValueError:
        raise NetworkFormatError(lineno, f"{what}: expected integer, got {v!r}") from None


def _parse_float(v: str, lineno: int, what: str) -> float:
    try:
        return float(v)
    except ValueError:
        raise NetworkFormatError(lineno, f"{what}: expected number, got {v!r}") from None


def _parse_index(v: str, lineno: int) -> int:
    idx = _parse_int(v, lineno, "attribute index")
    if not 0 <= idx < ATTR_TABLE_SIZE:
        raise NetworkFormatError(lineno, f"attribute index {idx} out of range (0..{ATTR_TABLE_SIZE - 1})")
    return idx


def _kv(tokens: list[str], allowed, lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise NetworkFormatError(lineno, f"syntax error: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k not in allowed:
            raise NetworkFormatError(lineno, f"unknown field {k!r}")
        if k in out:
            raise NetworkFormatError(lineno, f"duplicate field {k!r}")
        out[k] = v
    return out


def parse_network(text: str) -> NetworkDescription:
    """Parse the sectioned text format into a NetworkDescription."""
    section = None
    seen: set[str] = set()
    header: dict[str, str] = {}
    n_sets: dict[int, NeuronAttrs] = {}
    s_sets: dict[int, SynapseAttrs] = {}
    nid, nattr, nacdn, nv0 = [], [], [], []
    spost, spre, sattr, sacds, sw = [], [], [], [], []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise NetworkFormatError(lineno, f"syntax error in section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise NetworkFormatError(lineno, f"unknown section {section!r}")
            if section in seen:
                raise NetworkFormatError(lineno, f"duplicate section {section!r}")
            seen.add(section)
            continue
        if section is None:
            raise NetworkFormatError(lineno, "syntax error: record outside any section")

        if section == "header":
            if "=" not in line:
                raise NetworkFormatError(lineno, "syntax error: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in ("format", "n_neurons"):
                raise NetworkFormatError(lineno, f"unknown field {k!r}")
            header[k] = v
            continue

        tokens = line.split()
        if section == "neuron_attr_sets":
            idx = _parse_index(tokens[0], lineno)
            kv = _kv(tokens[1:], _NEURON_ATTR_KEYS, lineno)
            if idx in n_sets:
                raise NetworkFormatError(lineno, f"neuron attribute set {idx} defined twice")
            try:
                spec = kv.pop("channels", None)
                if spec is None:
                    chans = CLASSICAL_CHANNELS
                elif spec == "-":
                    chans = ()
                else:
                    chans = tuple(parse_channel(c) for c in spec.split(","))
            except ValueError as e:
                raise NetworkFormatError(lineno, str(e)) from None
            vals = {k: _parse_float(v, lineno, k) for k, v in kv.items()}
            n_sets[idx] = NeuronAttrs(channels=chans, **vals)
        elif section == "synapse_attr_sets":
            idx = _parse_index(tokens[0], lineno)
            kv = _kv(tokens[1:], _SYN_ATTR_KEYS, lineno)
            if idx in s_sets:
                raise NetworkFormatError(lineno, f"synapse attribute set {idx} defined twice")
            groups: dict[str, dict[str, float]] = {"stp": {}, "stdp": {}, "membrane": {}}
            for k, v in kv.items():
                groups[_SYN_ATTR_KEYS[k]][k] = _parse_float(v, lineno, k)
            s_sets[idx] = SynapseAttrs(StpAttrs(**groups["stp"]), StdpAttrs(**groups["stdp"]),
                                       SynapseMembraneAttrs(**groups["membrane"]))
        elif section == "neurons":
            i = _parse_int(tokens[0], lineno, "neuron id")
            kv = _kv(tokens[1:], _NEURON_KEYS, lineno)
            if "attr" not in kv:
                raise NetworkFormatError(lineno, "missing field 'attr'")
            nid.append(i)
            nattr.append(_parse_index(kv["attr"], lineno))
            nacdn.append(_parse_int(kv.get("acdn", "0"), lineno, "acdn"))
            nv0.append(_parse_float(kv["V_init"], lineno, "V_init") if "V_init" in kv else np.nan)
        else:
            kv = _kv(tokens, _SYNAPSE_KEYS, lineno)
            for k in ("post", "pre", "attr"):
                if k not in kv:
                    raise NetworkFormatError(lineno, f"missing field {k!r}")
            spost.append(_parse_int(kv["post"], lineno, "post"))
            spre.append(_parse_int(kv["pre"], lineno, "pre"))
            sattr.append(_parse_index(kv["attr"], lineno))
            sacds.append(_parse_int(kv.get("acds", "0"), lineno, "acds"))
            sw.append(_parse_float(kv.get("w", "0"), lineno, "w"))

    missing = [s for s in SECTIONS if s not in seen]
    if missing:
        raise NetworkFormatError(None, f"missing section(s): {', '.join(missing)}")
    if header.get("format", FORMAT_VERSION) != FORMAT_VERSION:
        raise NetworkFormatError(None, f"unsupported format {header['format']!r}")
    if "n_neurons" not in header:
        raise NetworkFormatError(None, "header: missing field 'n_neurons'")
    n = _parse_int(header["n_neurons"], 0, "n_neurons")
    return NetworkDescription(n, n_sets, s_sets, nid, nattr, nacdn, nv0,
                              spost, spre, sattr, sacds, sw)


def serialize_network(desc: NetworkDescription) -> str:
    out = ["[header]", f"format = {FORMAT_VERSION}", f"n_neurons = {desc.n_neurons}", "",
           "[neuron_attr_sets]"]
    for idx in sorted(desc.neuron_attr_sets):
        a = desc.neuron_attr_sets[idx]
        chans = ",".join(format_channel(c) for c in a.channels) or "-"
        out.append(f"{idx} C_m={_fmt(a.C_m)} I_bias={_fmt(a.I_bias)} tau_minus={_fmt(a.tau_minus)} "
                   f"a_minus={_fmt(a.a_minus)} channels={chans}")
    out += ["", "[synapse_attr_sets]"]
    for idx in sorted(desc.synapse_attr_sets):
        b = desc.synapse_attr_sets[idx]
        kv = [f"{f.name}={_fmt(getattr(part, f.name))}"
              for part in (b.stp, b.stdp, b.membrane) for f in fields(part)]
        out.append(f"{idx} " + " ".join(kv))
    out += ["", "[neurons]"]
    for d in desc.neurons():
        v0 = "" if d.V_init is None else f" V_init={_fmt(d.V_init)}"
        out.append(f"{d.id} attr={d.attr_set} acdn={d.acdn_delay}{v0}")
    out += ["", "[synapses]"]
    post, pre, attr, acds = (desc.syn_post.tolist(), desc.syn_pre.tolist(),
                             desc.syn_attr.tolist(), desc.syn_acds.tolist())
    w = desc.syn_w.tolist()
    for k in range(desc.n_synapses):
        out.append(f"post={post[k]} pre={pre[k]} attr={attr[k]} acds={acds[k]} w={_fmt(w[k])}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- validation

def validate(desc: NetworkDescription) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    v: list[str] = []
    n = desc.n_neurons
    dt = NETWORK_DT_MS
    if n < 1 or n >= NULL_ID:
        v.append(f"n_neurons {n} out of range (must be 1 .. {NULL_ID - 1})")
    for name, table in (("neuron", desc.neuron_attr_sets), ("synapse", desc.synapse_attr_sets)):
        if len(table) > ATTR_TABLE_SIZE:
            v.append(f"{name} attribute table has {len(table)} entries (max {ATTR_TABLE_SIZE})")
        for idx in table:
            if not 0 <= idx < ATTR_TABLE_SIZE:
                v.append(f"{name} attribute set index {idx} out of range")

    for idx, a in sorted(desc.neuron_attr_sets.items()):
        if not a.C_m > 0:
            v.append(f"neuron attribute set {idx}: C_m must be positive")
        if not a.tau_minus > dt:
            v.append(f"neuron attribute set {idx}: tau_minus: time constant must exceed network timestep")
        if not a.a_minus > 0:
            v.append(f"neuron attribute set {idx}: a_minus must be positive")
        if not math.isfinite(a.I_bias):
            v.append(f"neuron attribute set {idx}: I_bias must be finite")
        for ch in a.channels:
            if not ch.g_bar >= 0:
                v.append(f"neuron attribute set {idx}: channel {ch.name}: g_bar must be >= 0")
            if ch.p < 0 or ch.q < 0:
                v.append(f"neuron attribute set {idx}: channel {ch.name}: negative gate exponent")
            if ch.activation not in ("", "m", "n"):
                v.append(f"neuron attribute set {idx}: channel {ch.name}: unknown gate {ch.activation!r}")

    for idx, b in sorted(desc.synapse_attr_sets.items()):
        for tname in ("tau_f", "tau_d", "tau_s"):
            if not getattr(b.stp, tname) > dt:
                v.append(f"synapse attribute set {idx}: {tname}: time constant must exceed network timestep")
        if not b.stdp.tau_plus > dt:
            v.append(f"synapse attribute set {idx}: tau_plus: time constant must exceed network timestep")
        if not 0 <= b.stp.U <= 1:
            v.append(f"synapse attribute set {idx}: U must lie in [0, 1]")
        if not b.stp.A >= 0:
            v.append(f"synapse attribute set {idx}: A must be >= 0")
        for pname in ("a_plus", "eta_plus", "eta_minus", "w_max"):
            if not getattr(b.stdp, pname) > 0:
                v.append(f"synapse attribute set {idx}: {pname} must be positive")
        if b.stdp.eta_plus * b.stdp.a_plus > 1:
            v.append(f"synapse attribute set {idx}: eta_plus * a_plus exceeds 1")
        if not b.membrane.g_syn >= 0:
            v.append(f"synapse attribute set {idx}: g_syn must be >= 0")

    ids = desc.neuron_id
    uniq, counts = np.unique(ids, return_counts=True)
    for d in uniq[counts > 1]:
        v.append(f"duplicate neuron id {int(d)}")
    for d in ids[(ids < 0) | (ids >= n)]:
        v.append(f"neuron id {int(d)} out of range")
    declared = np.zeros(max(n, 0), bool)
    ok = ids[(ids >= 0) & (ids < n)]
    declared[ok] = True
    missing = np.flatnonzero(~declared)
    if missing.size:
        v.append(f"{missing.size} neuron id(s) not declared, first {int(missing[0])}")
    for d, a in zip(ids, desc.neuron_attr):
        if int(a) not in desc.neuron_attr_sets:
            v.append(f"neuron {int(d)}: neuron attribute set {int(a)} not defined")
    bad = (desc.neuron_acdn < 0) | (desc.neuron_acdn > MAX_ACDN)
    for d in ids[bad]:
        v.append(f"neuron {int(d)}: acdn_delay out of range [0, {MAX_ACDN}]")
    bad = ~np.isfinite(desc.neuron_V_init) & ~np.isnan(desc.neuron_V_init)
    for d in ids[bad]:
        v.append(f"neuron {int(d)}: V_init must be finite")

    post, pre = desc.syn_post, desc.syn_pre
    for k in np.flatnonzero((pre < 0) | (pre >= n)):
        v.append(f"synapse {k}: presynaptic id out of range ({int(pre[k])})")
    for k in np.flatnonzero((post < 0) | (post >= n)):
        v.append(f"synapse {k}: postsynaptic id out of range ({int(post[k])})")
    for k in np.flatnonzero((desc.syn_acds < 0) | (desc.syn_acds > MAX_ACDS)):
        v.append(f"synapse {k}: acds_delay out of range [0, {MAX_ACDS}]")

    # per-synapse checks against attribute sets, grouped by distinct attr index
    attr_of = np.full(max(n, 0) + 1, -1, np.int64)
    in_range = (ids >= 0) & (ids < n)
    attr_of[ids[in_range]] = desc.neuron_attr[in_range]
    post_ok = np.where((post >= 0) & (post < n), post, n)
    for a in np.unique(desc.syn_attr).tolist():
        sel = np.flatnonzero(desc.syn_attr == a)
        if a not in desc.synapse_attr_sets:
            v.append(f"synapse {int(sel[0])}: synapse attribute set {a} not defined")
            continue
        b = desc.synapse_attr_sets[a]
        w = desc.syn_w[sel]
        for k in sel[~((w >= 0) & (w <= b.stdp.w_max))]:
            v.append(f"synapse {int(k)}: w_init {desc.syn_w[k]} outside [0, {b.stdp.w_max}]")
        for na in np.unique(attr_of[post_ok[sel]]).tolist():
            nat = desc.neuron_attr_sets.get(na)
            if nat is not None and b.stdp.eta_minus * nat.a_minus > 1:
                v.append(f"synapse attribute set {a} with neuron attribute set {na}: "
                         f"eta_minus * a_minus exceeds 1")
    return v


# ---------------------------------------------------------------- stimulus

class Stimulus:
    """Extra injected current per (network step, neuron), from lines
    ``timestep neuron_id current``.  Repeated entries accumulate."""

    def __init__(self, entries: Iterable[tuple[int, int, float]] = ()):
        self._by_step: dict[int, list[tuple[int, float]]] = {}
        for t, i, c in entries:
            self._by_step.setdefault(int(t), []).append((int(i), float(c)))

    @classmethod
    def parse(cls, text: str) -> "Stimulus":
        entries = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise NetworkFormatError(lineno, "stimulus: expected 'timestep neuron_id current'")
            entries.append((_parse_int(parts[0], lineno, "timestep"),
                            _parse_int(parts[1], lineno, "neuron_id"),
                            _parse_float(parts[2], lineno, "current")))
        return cls(entries)

    def __bool__(self):
        return bool(self._by_step)

    def max_neuron(self) -> int:
        return max((i for v in self._by_step.values() for i, _ in v), default=-1)

    def current_at(self, t: int, n_neurons: int) -> np.ndarray | None:
        """float32 vector of extra current for step t, or None if none."""
        entries = self._by_step.get(t)
        if not entries:
            return None
        out = np.zeros(n_neurons, np.float32)
        for i, c in entries:
            out[i] = out[i] + np.float32(c)
        return out


# ---------------------------------------------------------------- generator

def default_attr_tables():
    """Neuron sets: quiet, near-threshold, tonically driven.  Synapse sets:
    facilitating excitatory, depressing excitatory, inhibitory."""
    neuron = {
        0: NeuronAttrs(I_bias=0.0, tau_minus=20.0, a_minus=1.0),
        1: NeuronAttrs(I_bias=5.0, tau_minus=20.0, a_minus=1.0),
        2: NeuronAttrs(I_bias=10.0, tau_minus=20.0, a_minus=1.0),
    }
    synapse = {
        0: SynapseAttrs(StpAttrs(U=0.15, A=1.0, tau_f=200.0, tau_d=50.0, tau_s=5.0),
                        StdpAttrs(tau_plus=20.0, a_plus=1.0, eta_plus=0.01, eta_minus=0.012, w_max=1.0),
                        SynapseMembraneAttrs(g_syn=0.3, E_syn=0.0)),
        1: SynapseAttrs(StpAttrs(U=0.5, A=1.0, tau_f=20.0, tau_d=300.0, tau_s=3.0),
                        StdpAttrs(tau_plus=16.8, a_plus=1.0, eta_plus=0.005, eta_minus=0.005, w_max=1.0),
                        SynapseMembraneAttrs(g_syn=0.3, E_syn=0.0)),
        2: SynapseAttrs(StpAttrs(U=0.25, A=1.0, tau_f=50.0, tau_d=100.0, tau_s=8.0),
                        StdpAttrs(tau_plus=20.0, a_plus=1.0, eta_plus=0.002, eta_minus=0.002, w_max=1.0),
                        SynapseMembraneAttrs(g_syn=0.4, E_syn=-80.0)),
    }
    return neuron, synapse


def random_network(
    n_neurons: int,
    mean_in_degree: float,
    seed: int = 0,
    in_degree: str = "poisson",
    exc_fraction: float = 0.8,
    driven_fraction: float = 0.2,
    max_acdn: int = 10,
    max_acds: int = MAX_ACDS,
) -> NetworkDescription:
    """Seeded random network with the default attribute tables.

    ``in_degree`` is "poisson", "fixed" or "skewed" (geometric, heavy tail).
    Presynaptic ids are uniform; the synapse set follows the presynaptic
    neuron's type (excitatory or inhibitory).
    """
    rng = np.random.default_rng(seed)
    n_sets, s_sets = default_attr_tables()
    if in_degree == "poisson":
        deg = rng.poisson(mean_in_degree, n_neurons)
    elif in_degree == "fixed":
        deg = np.full(n_neurons, int(round(mean_in_degree)))
    elif in_degree == "skewed":
        deg = rng.geometric(1.0 / (1.0 + mean_in_degree), n_neurons) - 1
    else:
        raise ValueError(f"unknown in-degree distribution {in_degree!r}")
    deg = deg.astype(np.int64)

    kind = rng.random(n_neurons)
    n_attr = np.where(kind < driven_fraction, 2, np.where(kind < driven_fraction + 0.2, 1, 0))
    excit = rng.random(n_neurons) < exc_fraction
    acdn = rng.integers(0, max_acdn + 1, n_neurons) if max_acdn > 0 else np.zeros(n_neurons, np.int64)
    v0 = np.round(rng.uniform(-70.0, -60.0, n_neurons), 3)

    n_syn = int(deg.sum())
    post = np.repeat(np.arange(n_neurons), deg)
    # interleave declaration order a little so grouping by post matters
    perm = rng.permutation(n_syn)
    post = post[perm]
    pre = rng.integers(0, n_neurons, n_syn)
    s_attr = np.where(excit[pre], rng.integers(0, 2, n_syn), 2)
    acds = rng.integers(0, max_acds + 1, n_syn) if max_acds > 0 else np.zeros(n_syn, np.int64)
    w = np.round(rng.uniform(0.1, 0.9, n_syn), 4)
    return NetworkDescription(
        n_neurons, n_sets, s_sets,
        np.arange(n_neurons), n_attr, acdn, v0,
        post, pre, s_attr, acds, w,
    )
