"""Per-neuron and per-synapse numerical kernels.

Every kernel works on numpy float32 scalars or arrays and performs its
arithmetic in single precision with a fixed operation order, so an array
call and an element-by-element call give bit-identical results.  Units are
mV, ms, mS/cm^2, uA/cm^2 and uF/cm^2 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

F32 = np.float32

NETWORK_DT = F32(1.0)
NEURON_DT = F32(0.04)
SUBSTEPS = 25

_ZERO = F32(0.0)
_ONE = F32(1.0)
_HALF = F32(0.5)
_TEN = F32(10.0)
_SERIES_EPS = F32(1e-6)


class NumericalInstabilityError(ArithmeticError):
    """Raised when a soma update produces a non-finite value."""

    def __init__(self, indices, step=None):
        self.indices = [int(i) for i in np.atleast_1d(indices)]
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"non-finite membrane state for neuron(s) {self.indices}{where}")


@dataclass(frozen=True)
class IonChannelSpec:
    """One ionic current: g_bar * act**p * h**q * (V - V_eq).

    ``activation`` names the activating gate ("m" or "n"), or "" for a
    channel without one; the inactivating gate is always "h".
    """

    name: str
    g_bar: float
    V_eq: float
    activation: str = ""
    p: int = 0
    q: int = 0

    @property
    def gate_kind(self) -> str:
        out = f"{self.activation}{self.p}" if self.activation and self.p else ""
        if self.q:
            out += f"h{self.q}"
        return out or "-"


CLASSICAL_CHANNELS = (
    IonChannelSpec("Na", 120.0, 50.0, "m", 3, 1),
    IonChannelSpec("K", 36.0, -77.0, "n", 4, 0),
    IonChannelSpec("L", 0.3, -54.387, "", 0, 0),
)


@dataclass(frozen=True)
class NeuronAttrs:
    C_m: float = 1.0
    channels: tuple[IonChannelSpec, ...] = CLASSICAL_CHANNELS
    I_bias: float = 0.0
    tau_minus: float = 20.0
    a_minus: float = 1.0


@dataclass(frozen=True)
class StpAttrs:
    U: float = 0.2
    A: float = 1.0
    tau_f: float = 100.0
    tau_d: float = 200.0
    tau_s: float = 5.0


@dataclass(frozen=True)
class StdpAttrs:
    tau_plus: float = 20.0
    a_plus: float = 1.0
    eta_plus: float = 0.01
    eta_minus: float = 0.01
    w_max: float = 1.0


@dataclass(frozen=True)
class SynapseMembraneAttrs:
    g_syn: float = 0.1
    E_syn: float = 0.0


@dataclass
class SomaState:
    V: np.ndarray
    m: np.ndarray
    h: np.ndarray
    n: np.ndarray

    def gate(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class GateRates:
    alpha_m: np.ndarray
    beta_m: np.ndarray
    alpha_h: np.ndarray
    beta_h: np.ndarray
    alpha_n: np.ndarray
    beta_n: np.ndarray


@dataclass
class StpState:
    u: np.ndarray = field(default_factory=lambda: F32(0.0))
    x: np.ndarray = field(default_factory=lambda: F32(1.0))
    S: np.ndarray = field(default_factory=lambda: F32(0.0))


def _f32(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float32)


def _linoid(V, offset: float, scale: float, limit: float):
    """scale*(V+offset) / (1 - exp(-(V+offset)/10)), with the 0/0 point removed.

    The denominator is evaluated as -expm1(-x), which avoids cancellation
    near x = 0.  Closer still the first-order series limit*(1 + x/2) is
    used, where limit is the exact value at x == 0.
    """
    shifted = V + F32(offset)
    x = shifted / _TEN
    small = np.abs(x) < _SERIES_EPS
    den = -np.expm1(-x)
    if not small.any():
        return F32(scale) * shifted / den
    den = np.where(small, _ONE, den)
    series = F32(limit) * (_ONE + x * _HALF)
    return np.where(small, series, F32(scale) * shifted / den).astype(np.float32, copy=False)


def hh_gate_rates(V) -> GateRates:
    """Classical squid-axon opening/closing rates (1/ms) at potential V (mV)."""
    V = _f32(V)
    v65 = -(V + F32(65.0))
    return GateRates(
        alpha_m=_linoid(V, 40.0, 0.1, 1.0),
        beta_m=F32(4.0) * np.exp(v65 / F32(18.0)),
        alpha_h=F32(0.07) * np.exp(v65 / F32(20.0)),
        beta_h=_ONE / (_ONE + np.exp(-(V + F32(35.0)) / _TEN)),
        alpha_n=_linoid(V, 55.0, 0.01, 0.1),
        beta_n=F32(0.125) * np.exp(v65 / F32(80.0)),
    )


def steady_state_gates(V) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(m_inf, h_inf, n_inf) at V, each alpha / (alpha + beta)."""
    r = hh_gate_rates(V)
    return (
        r.alpha_m / (r.alpha_m + r.beta_m),
        r.alpha_h / (r.alpha_h + r.beta_h),
        r.alpha_n / (r.alpha_n + r.beta_n),
    )


def rest_state(V) -> SomaState:
    V = _f32(V)
    m, h, n = steady_state_gates(V)
    return SomaState(V=V, m=m, h=h, n=n)


def _ipow(x, k: int):
    out = x
    for _ in range(k - 1):
        out = out * x
    return out


def ionic_current(state: SomaState, channels: Sequence[IonChannelSpec]):
    """Total membrane current sum_i g_i(V - V_eq,i), summed in channel order."""
    total = None
    for ch in channels:
        g = F32(ch.g_bar)
        if ch.activation and ch.p:
            g = g * _ipow(state.gate(ch.activation), ch.p)
        if ch.q:
            g = g * _ipow(state.h, ch.q)
        term = g * (state.V - F32(ch.V_eq))
        total = term if total is None else total + term
    if total is None:
        return np.zeros_like(state.V)
    return total


def _gate_update(x, alpha, beta, dt):
    x = x + dt * (alpha * (_ONE - x) - beta * x)
    return np.minimum(np.maximum(x, _ZERO), _ONE)


def hh_step(state: SomaState, attrs: NeuronAttrs, I_ext, dt=NEURON_DT, check: bool = True) -> SomaState:
    """One forward-Euler soma update; gates are clamped to [0, 1].

    Raises NumericalInstabilityError (listing offending element indices) if
    the new state is not finite and ``check`` is set.
    """
    dt = F32(dt)
    I_ext = _f32(I_ext)
    r = hh_gate_rates(state.V)
    I_ion = ionic_current(state, attrs.channels)
    V = state.V + dt * (I_ext - I_ion) / F32(attrs.C_m)
    out = SomaState(
        V=V,
        m=_gate_update(state.m, r.alpha_m, r.beta_m, dt),
        h=_gate_update(state.h, r.alpha_h, r.beta_h, dt),
        n=_gate_update(state.n, r.alpha_n, r.beta_n, dt),
    )
    if check:
        bad = ~(np.isfinite(out.V) & np.isfinite(out.m) & np.isfinite(out.h) & np.isfinite(out.n))
        if np.any(bad):
            raise NumericalInstabilityError(np.flatnonzero(bad))
    return out


def detect_spike(V_prev, V_now):
    """Upward zero crossing: V_prev < 0 <= V_now."""
    return (V_prev < 0) & (V_now >= 0)


def decay_factor(tau, dt=NETWORK_DT):
    """Per-step linear decay multiplier 1 - dt/tau."""
    return _ONE - F32(dt) / _f32(tau)


def decay_step(x, tau, spike):
    """Reset-to-one conductance trace: 1 on a spike, else x*(1 - 1/tau)."""
    x = _f32(x)
    return np.where(spike, _ONE, x * decay_factor(tau, _ONE)).astype(np.float32, copy=False)


def stp_step(state: StpState, attrs: StpAttrs, pre_spike, dt=NETWORK_DT) -> StpState:
    """Facilitation/depression update: linear decay, then the spike jumps.

    On a spike u jumps first and the new u scales both the release into S
    and the depletion of x (which uses the pre-jump x).
    """
    u = _f32(state.u) * decay_factor(attrs.tau_f, dt)
    x = _f32(state.x)
    x = x + (_ONE - x) * (F32(dt) / _f32(attrs.tau_d))
    S = _f32(state.S) * decay_factor(attrs.tau_s, dt)
    u_j = u + _f32(attrs.U) * (_ONE - u)
    rel = u_j * x
    return StpState(
        u=np.where(pre_spike, u_j, u).astype(np.float32, copy=False),
        x=np.where(pre_spike, x - rel, x).astype(np.float32, copy=False),
        S=np.where(pre_spike, S + _f32(attrs.A) * rel, S).astype(np.float32, copy=False),
    )


def post_trace_step(y, n_attrs: NeuronAttrs, post_spike, dt=NETWORK_DT):
    """Postsynaptic trace: decay, then add a_minus on a spike."""
    y = _f32(y) * decay_factor(n_attrs.tau_minus, dt)
    return np.where(post_spike, y + F32(n_attrs.a_minus), y).astype(np.float32, copy=False)


def stdp_step(x_j, y, w, s_attrs: StdpAttrs, n_attrs: NeuronAttrs, pre_spike, post_spike, dt=NETWORK_DT):
    """Trace-based weight update; returns (x_j', y', w').

    Weight changes read the decayed traces before this step's increments.
    Depression (presynaptic spike) is applied before potentiation
    (postsynaptic spike); the result is clipped to [0, w_max].
    """
    xd = _f32(x_j) * decay_factor(s_attrs.tau_plus, dt)
    yd = _f32(y) * decay_factor(n_attrs.tau_minus, dt)
    w = _f32(w)
    w_max = _f32(s_attrs.w_max)
    w = np.where(pre_spike, w - w * _f32(s_attrs.eta_minus) * yd, w)
    w = np.where(post_spike, w + (w_max - w) * _f32(s_attrs.eta_plus) * xd, w)
    w = np.minimum(np.maximum(w, _ZERO), w_max).astype(np.float32, copy=False)
    x_new = np.where(pre_spike, xd + _f32(s_attrs.a_plus), xd).astype(np.float32, copy=False)
    y_new = np.where(post_spike, yd + F32(n_attrs.a_minus), yd).astype(np.float32, copy=False)
    return x_new, y_new, w


def synaptic_current(S, w, attrs: SynapseMembraneAttrs, V_post):
    """S * w * g_syn * (E_syn - V_post), evaluated left to right."""
    return _f32(S) * _f32(w) * _f32(attrs.g_syn) * (_f32(attrs.E_syn) - _f32(V_post))
