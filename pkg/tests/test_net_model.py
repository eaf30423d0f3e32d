import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuromachine.model_core import IonChannelSpec, NeuronAttrs, StdpAttrs, StpAttrs, SynapseMembraneAttrs
from neuromachine.net_model import (
    NULL_ID,
    NetworkDescription,
    NetworkFormatError,
    Stimulus,
    SynapseAttrs,
    parse_channel,
    parse_network,
    random_network,
    resolve_attrs,
    serialize_network,
    validate,
)

from conftest import SAMPLES

MINIMAL = """\
[header]
format = nmnet-1
n_neurons = 1

[neuron_attr_sets]
0 C_m=1 I_bias=0 tau_minus=20 a_minus=1 channels=Na/120/50/m3h1,K/36/-77/n4,L/0.3/-54.387/-

[synapse_attr_sets]

[neurons]
0 attr=0 acdn=0

[synapses]
"""

SYN_SET = ("0 U=0.2 A=1 tau_f=100 tau_d=200 tau_s=5 tau_plus=20 a_plus=1 eta_plus=0.01 "
           "eta_minus=0.01 w_max=1 g_syn=0.1 E_syn=0")


def with_synapses(lines, n=2, syn_set=SYN_SET):
    text = MINIMAL.replace("n_neurons = 1", f"n_neurons = {n}")
    text = text.replace("[synapse_attr_sets]\n", f"[synapse_attr_sets]\n{syn_set}\n")
    neurons = "".join(f"{i} attr=0 acdn=0\n" for i in range(n))
    text = text.replace("0 attr=0 acdn=0\n", neurons)
    return text + "".join(l + "\n" for l in lines)


def test_minimal_file():
    d = parse_network(MINIMAL)
    assert d.n_neurons == 1 and d.n_synapses == 0
    assert validate(d) == []
    (n0,) = list(d.neurons())
    assert n0.V_init is None  # default potential applied at compile time


def test_attr_index_out_of_range():
    bad = with_synapses(["post=0 pre=1 attr=1024 acds=0 w=0.5"])
    with pytest.raises(NetworkFormatError, match="index 1024 out of range") as e:
        parse_network(bad)
    assert e.value.lineno == bad.splitlines().index("post=0 pre=1 attr=1024 acds=0 w=0.5") + 1


def test_small_sample_parses_in_declaration_order(small_desc):
    d = small_desc
    assert validate(d) == []
    assert d.n_synapses == 11
    assert np.bincount(d.syn_post).tolist() == [2, 5, 4]
    order = d.synapse_order()
    # grouping keeps declaration order within each neuron
    for i in range(3):
        ks = order[d.syn_post[order] == i]
        assert list(ks) == sorted(ks)
    assert [(s.post, s.pre) for s in d.synapses()][:3] == [(0, 1), (0, 2), (1, 0)]


@pytest.mark.parametrize("text,match", [
    ("[header]\nformat = nmnet-1\nn_neurons = 1\n", "missing section"),
    (MINIMAL.replace("0 attr=0 acdn=0", "0 attr=0 acdn=0 colour=red"), "unknown field"),
    (MINIMAL.replace("[neurons]", "[neurons"), "syntax error"),
    (MINIMAL.replace("acdn=0", "acdn=zero"), "line 11: acdn"),
    (MINIMAL.replace("format = nmnet-1", "format = other-9"), "format"),
], ids=["missing-section", "unknown-field", "bad-header", "bad-int", "bad-version"])
def test_parse_errors(text, match):
    with pytest.raises(NetworkFormatError, match=match):
        parse_network(text)


def test_unknown_section():
    with pytest.raises(NetworkFormatError, match="unknown section"):
        parse_network(MINIMAL + "[extras]\n")


def test_duplicate_neuron_id():
    d = parse_network(MINIMAL.replace("n_neurons = 1", "n_neurons = 2").replace(
        "0 attr=0 acdn=0", "0 attr=0 acdn=0\n0 attr=0 acdn=0"))
    v = validate(d)
    assert any("duplicate neuron id 0" in s for s in v)


def test_presynaptic_id_out_of_range():
    v = validate(parse_network(with_synapses(["post=0 pre=2 attr=0 acds=0 w=0.5"])))
    assert v == ["synapse 0: presynaptic id out of range (2)"]


def test_short_time_constant():
    v = validate(parse_network(with_synapses([], syn_set=SYN_SET.replace("tau_s=5", "tau_s=0.5"))))
    assert len(v) == 1 and "time constant must exceed network timestep" in v[0]


@pytest.mark.parametrize("line,frag", [
    ("post=0 pre=1 attr=0 acds=25 w=0.5", "acds_delay out of range"),
    ("post=0 pre=1 attr=0 acds=0 w=1.5", "w_init"),
    ("post=0 pre=1 attr=3 acds=0 w=0.5", "synapse attribute set 3 not defined"),
    ("post=5 pre=1 attr=0 acds=0 w=0.5", "postsynaptic id out of range"),
])
def test_synapse_violations(line, frag):
    v = validate(parse_network(with_synapses([line])))
    assert len(v) == 1 and frag in v[0]


def test_acdn_range_and_eta_bound():
    d = parse_network(with_synapses([], syn_set=SYN_SET.replace("eta_plus=0.01", "eta_plus=2")).replace(
        "1 attr=0 acdn=0", "1 attr=0 acdn=257"))
    v = validate(d)
    assert any("acdn_delay out of range" in s for s in v)
    assert any("eta_plus * a_plus exceeds 1" in s for s in v)


def test_resolve_attrs(small_desc):
    d = small_desc
    assert resolve_attrs(d, 1) == d.synapse_attr_sets[1]
    assert resolve_attrs(d, 1, kind="neuron").I_bias == 2
    with pytest.raises(KeyError):
        resolve_attrs(d, 7)
    a, b = d.synapse(0), d.synapse(2)
    assert a.attr_set == b.attr_set and resolve_attrs(d, a.attr_set) == resolve_attrs(d, b.attr_set)


def test_bundled_samples_validate(small_desc, net1000_desc):
    assert validate(small_desc) == []
    assert validate(net1000_desc) == []


def test_null_id_reserved():
    assert NULL_ID == 2**24 - 1
    d = random_network(3, 1, seed=0)
    d2 = NetworkDescription(NULL_ID, d.neuron_attr_sets, d.synapse_attr_sets, [], [], [], [], [], [], [], [], [])
    assert any("n_neurons" in s for s in validate(d2))


@st.composite
def channels(draw):
    name = draw(st.sampled_from(["Na", "K", "L", "Ca", "A"]))
    act = draw(st.sampled_from(["", "m", "n"]))
    p = draw(st.integers(1, 4)) if act else 0
    q = draw(st.integers(0, 2))
    g = draw(st.floats(0, 200, allow_nan=False))
    e = draw(st.floats(-100, 100, allow_nan=False))
    return IonChannelSpec(name, g, e, act, p, q)


@st.composite
def descriptions(draw):
    n = draw(st.integers(1, 12))
    pos = st.floats(1.01, 500, allow_nan=False)
    n_sets = {k: NeuronAttrs(C_m=draw(st.floats(0.1, 5)), channels=tuple(draw(st.lists(channels(), max_size=4))),
                             I_bias=draw(st.floats(-20, 20)), tau_minus=draw(pos), a_minus=draw(st.floats(0.01, 1)))
              for k in draw(st.sets(st.integers(0, 1023), min_size=1, max_size=3))}
    s_sets = {k: SynapseAttrs(StpAttrs(draw(st.floats(0, 1)), draw(st.floats(0, 2)), draw(pos), draw(pos), draw(pos)),
                              StdpAttrs(draw(pos), draw(st.floats(0.01, 1)), draw(st.floats(0.001, 0.5)),
                                        draw(st.floats(0.001, 0.5)), draw(st.floats(0.1, 3))),
                              SynapseMembraneAttrs(draw(st.floats(0, 2)), draw(st.floats(-90, 10))))
              for k in draw(st.sets(st.integers(0, 1023), min_size=1, max_size=3))}
    nk, sk = sorted(n_sets), sorted(s_sets)
    ids = draw(st.permutations(range(n)))
    n_syn = draw(st.integers(0, 30))
    sattr = [draw(st.sampled_from(sk)) for _ in range(n_syn)]
    return NetworkDescription(
        n, n_sets, s_sets, ids,
        [draw(st.sampled_from(nk)) for _ in range(n)],
        [draw(st.integers(0, 256)) for _ in range(n)],
        [draw(st.one_of(st.just(float("nan")), st.floats(-90, -40))) for _ in range(n)],
        [draw(st.integers(0, n - 1)) for _ in range(n_syn)],
        [draw(st.integers(0, n - 1)) for _ in range(n_syn)],
        sattr,
        [draw(st.integers(0, 24)) for _ in range(n_syn)],
        [draw(st.floats(0, 1)) * s_sets[a].stdp.w_max for a in sattr],
    )


@given(descriptions())
def test_round_trip(desc):
    text = serialize_network(desc)
    back = parse_network(text)
    assert back == desc
    assert serialize_network(back) == text


@given(st.integers(1, 80), st.floats(0, 12), st.integers(0, 2**32 - 1),
       st.sampled_from(["poisson", "fixed", "skewed"]))
def test_generated_networks_validate(n, k, seed, dist):
    assert validate(random_network(n, k, seed=seed, in_degree=dist)) == []


def test_generator_is_seeded():
    assert random_network(50, 5, seed=3) == random_network(50, 5, seed=3)
    assert random_network(50, 5, seed=3) != random_network(50, 5, seed=4)


def test_parse_channel_forms():
    assert parse_channel("Na/120/50/m3h1") == IonChannelSpec("Na", 120, 50, "m", 3, 1)
    assert parse_channel("L/0.3/-54.387/-") == IonChannelSpec("L", 0.3, -54.387)
    assert parse_channel("X/1/0/h2") == IonChannelSpec("X", 1, 0, "", 0, 2)
    with pytest.raises(ValueError):
        parse_channel("Na/120/50")


def test_stimulus_parse_and_accumulate():
    s = Stimulus.parse("# t id I\n3 1 2.5\n3 1 0.5\n4 0 -1\n")
    assert s.max_neuron() == 1
    assert s.current_at(3, 2).tolist() == [0.0, 3.0]
    assert s.current_at(5, 2) is None
    with pytest.raises(NetworkFormatError, match="line 1"):
        Stimulus.parse("3 1\n")


def test_small_sample_file_is_canonical_after_round_trip(small_desc):
    assert parse_network(serialize_network(small_desc)) == small_desc
    assert (SAMPLES / "three_neuron.net").read_text().startswith("#")
