"""Compiled inner loops of the engine.

Each loop performs exactly the float32 operations of the corresponding
``model_core`` kernels in the same order, so results agree bit for bit
with the reference simulator (checked in the test suite).

Soma: the exponentials stay in numpy.  The six exponent arguments of
every neuron are written to a (6, n) buffer; numpy applies expm1 to the
two linoid rows (0, 1) and exp to the rest in place, and the compiled
update consumes the buffer and writes the next substep's arguments.
"""

from __future__ import annotations

import numba
import numpy as np

from .model_core import NEURON_DT, _SERIES_EPS

_f = np.float32
_0, _1, _HALF = _f(0.0), _f(1.0), _f(0.5)
_10, _18, _20, _80 = _f(10.0), _f(18.0), _f(20.0), _f(80.0)
_35, _40, _55, _65 = _f(35.0), _f(40.0), _f(55.0), _f(65.0)
_AM, _AN, _AM_LIM, _AN_LIM = _f(0.1), _f(0.01), _f(1.0), _f(0.1)
_BM, _AH, _BN = _f(4.0), _f(0.07), _f(0.125)
_EPS = _f(_SERIES_EPS)


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _exp_args(V, buf):
    for i in range(V.shape[0]):
        v = V[i]
        v65 = -(v + _65)
        buf[0, i] = -((v + _40) / _10)
        buf[1, i] = -((v + _55) / _10)
        buf[2, i] = v65 / _18
        buf[3, i] = v65 / _20
        buf[4, i] = -(v + _35) / _10
        buf[5, i] = v65 / _80


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _gate(x, a, b, dt):
    x = x + dt * (a * (_1 - x) - b * x)
    if x < _0:
        x = _0
    if x > _1:
        x = _1
    return x


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _ipow(x, k):
    out = x
    for _ in range(k - 1):
        out = out * x
    return out


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _update(V, m, h, n, I, buf, spiked, ch_g, ch_E, ch_act, ch_p, ch_q, C_m, dt):
    for i in range(V.shape[0]):
        v, mi, hi, ni = V[i], m[i], h[i], n[i]
        sh = v + _40
        x = sh / _10
        if abs(x) < _EPS:
            am = _AM_LIM * (_1 + x * _HALF)
        else:
            am = _AM * sh / -buf[0, i]
        bm = _BM * buf[2, i]
        ah = _AH * buf[3, i]
        bh = _1 / (_1 + buf[4, i])
        sh = v + _55
        x = sh / _10
        if abs(x) < _EPS:
            an = _AN_LIM * (_1 + x * _HALF)
        else:
            an = _AN * sh / -buf[1, i]
        bn = _BN * buf[5, i]

        total = _0
        for c in range(ch_g.shape[0]):
            g = ch_g[c]
            if ch_act[c] == 1 and ch_p[c] > 0:
                g = g * _ipow(mi, ch_p[c])
            elif ch_act[c] == 2 and ch_p[c] > 0:
                g = g * _ipow(ni, ch_p[c])
            if ch_q[c] > 0:
                g = g * _ipow(hi, ch_q[c])
            term = g * (v - ch_E[c])
            total = term if c == 0 else total + term

        v_new = v + dt * (I[i] - total) / C_m
        m[i] = _gate(mi, am, bm, dt)
        h[i] = _gate(hi, ah, bh, dt)
        n[i] = _gate(ni, an, bn, dt)
        V[i] = v_new
        if v < _0 and v_new >= _0:
            spiked[i] = True

        v65 = -(v_new + _65)
        buf[0, i] = -((v_new + _40) / _10)
        buf[1, i] = -((v_new + _55) / _10)
        buf[2, i] = v65 / _18
        buf[3, i] = v65 / _20
        buf[4, i] = -(v_new + _35) / _10
        buf[5, i] = v65 / _80


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _update_classical(V, m, h, n, I, buf, spiked, gNa, ENa, gK, EK, gL, EL, C_m, dt):
    # same arithmetic as _update for the (m3h1, n4, leak) channel set, kept
    # branch-free so the loop vectorizes
    for i in range(V.shape[0]):
        v, mi, hi, ni = V[i], m[i], h[i], n[i]
        sh = v + _40
        x = sh / _10
        am_s = _AM_LIM * (_1 + x * _HALF)
        am_f = _AM * sh / -buf[0, i]
        am = am_s if abs(x) < _EPS else am_f
        bm = _BM * buf[2, i]
        ah = _AH * buf[3, i]
        bh = _1 / (_1 + buf[4, i])
        sh = v + _55
        x = sh / _10
        an_s = _AN_LIM * (_1 + x * _HALF)
        an_f = _AN * sh / -buf[1, i]
        an = an_s if abs(x) < _EPS else an_f
        bn = _BN * buf[5, i]

        total = gNa * (mi * mi * mi) * hi * (v - ENa)
        total = total + gK * (ni * ni * ni * ni) * (v - EK)
        total = total + gL * (v - EL)

        v_new = v + dt * (I[i] - total) / C_m
        m[i] = _gate(mi, am, bm, dt)
        h[i] = _gate(hi, ah, bh, dt)
        n[i] = _gate(ni, an, bn, dt)
        V[i] = v_new
        spiked[i] |= (v < _0) & (v_new >= _0)

        v65 = -(v_new + _65)
        buf[0, i] = -((v_new + _40) / _10)
        buf[1, i] = -((v_new + _55) / _10)
        buf[2, i] = v65 / _18
        buf[3, i] = v65 / _20
        buf[4, i] = -(v_new + _35) / _10
        buf[5, i] = v65 / _80


def _is_classical(chans) -> bool:
    kinds = [(c.activation, c.p, c.q) for c in chans]
    return kinds == [("m", 3, 1), ("n", 4, 0), ("", 0, 0)]


class SomaKernel:
    """Channel tables of one (C_m, channels) group in array form."""

    def __init__(self, attrs):
        chans = attrs.channels
        self.g = np.array([c.g_bar for c in chans], np.float32)
        self.E = np.array([c.V_eq for c in chans], np.float32)
        self.act = np.array([{"": 0, "m": 1, "n": 2}[c.activation] for c in chans], np.int64)
        self.p = np.array([c.p for c in chans], np.int64)
        self.q = np.array([c.q for c in chans], np.int64)
        self.C_m = np.float32(attrs.C_m)
        self.classical = _is_classical(chans)

    def run(self, V, m, h, n, I, substeps: int, dt=NEURON_DT, trace=None):
        """Advance contiguous float32 arrays in place; returns the OR of spikes.

        ``trace`` optionally lists local indices whose (V, m, h, n) are
        recorded after every substep; the records are returned alongside.
        """
        dt = np.float32(dt)
        spiked = np.zeros(V.shape[0], np.bool_)
        buf = np.empty((6, V.shape[0]), np.float32)
        _exp_args(V, buf)
        rec = []
        for _ in range(substeps):
            with np.errstate(over="ignore"):
                np.expm1(buf[:2], out=buf[:2])
                np.exp(buf[2:], out=buf[2:])
            if self.classical:
                _update_classical(V, m, h, n, I, buf, spiked, self.g[0], self.E[0], self.g[1], self.E[1],
                                  self.g[2], self.E[2], self.C_m, dt)
            else:
                _update(V, m, h, n, I, buf, spiked, self.g, self.E, self.act, self.p, self.q,
                        self.C_m, dt)
            if trace:
                rec.append([(V[j], m[j], h[j], n[j]) for j in trace])
        return spiked, rec


@numba.njit(cache=True, nogil=True, error_model="numpy")
def synapse_pass(hist_flat, hist_index, slot_attr, table, u, x, S, xj, w,
                 neuron_rows, p, y_dec, post_prev, V, out):
    """One network step over an HN's slots, neuron by neuron.

    Per slot: STP decay and jump, STDP depression (presynaptic spike) and
    potentiation (postsynaptic spike of the previous step), clipping, trace
    increment, then the current.  Each row is reduced by the lane tree and
    the rows of a neuron are added in order into ``out``.  ``table`` holds
    the per-attribute constants (engine.SLOT_CONSTANTS order); its last row
    marks null slots.
    """
    null_row = table.shape[0] - 1
    lane = np.empty(p, np.float32)
    k = 0
    for i in range(neuron_rows.shape[0]):
        acc = _0
        yi = y_dec[i]
        post = post_prev[i]
        vi = V[i]
        for _ in range(neuron_rows[i]):
            for j in range(p):
                a = slot_attr[k]
                c = table[a]
                spike = hist_flat[hist_index[k]]
                uk = u[k] * c[0]
                xk = x[k]
                xk = xk + (_1 - xk) * c[1]
                Sk = S[k] * c[2]
                xjk = xj[k] * c[5]
                wk = w[k]
                if spike:
                    uk = uk + c[3] * (_1 - uk)
                    rel = uk * xk
                    xk = xk - rel
                    Sk = Sk + c[4] * rel
                    wk = wk - wk * c[8] * yi
                if post:
                    wk = wk + (c[9] - wk) * c[7] * xjk
                if spike or post:
                    if wk < _0:
                        wk = _0
                    if wk > c[9]:
                        wk = c[9]
                if spike:
                    xjk = xjk + c[6]
                u[k], x[k], S[k], xj[k], w[k] = uk, xk, Sk, xjk, wk
                lane[j] = _0 if a == null_row else Sk * wk * c[10] * (c[11] - vi)
                k += 1
            n = p
            while n > 1:
                half = n // 2
                for j in range(half):
                    lane[j] = lane[2 * j] + lane[2 * j + 1]
                if n % 2:
                    lane[half] = lane[n - 1]
                n = half + n % 2
            acc = acc + lane[0]
        out[i] = acc
