"""Fused Brownian-bridge / action / phase inner loop.

One call consumes a chunk of pre-drawn standard normals and returns the
cos/sin of the action phase per sample, never materializing whole paths.
The numba version is the default; set ANTIWICK_DISABLE_NUMBA=1 to force the
step-vectorized numpy implementation (same math, used as a cross-check).

The bridge is sampled by exact sequential Gaussian conditioning; the area
integral uses the midpoint (Stratonovich) rule and the symbol integral the
trapezoid rule in time.
"""
from __future__ import annotations

import math
import os

import numpy as np

_DISABLE = os.environ.get("ANTIWICK_DISABLE_NUMBA", "") not in ("", "0")

try:  # pragma: no cover - exercised implicitly everywhere
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _phase_chunk_core(
    normals, p0, q0, p1, q1, r, hbar, t_over_r,
    marr, narr, cre, cim, wa, wb, out_re, out_im,
):
    nsamp = normals.shape[0]
    nsteps = normals.shape[1] + 1
    dt = r / nsteps
    nterms = marr.shape[0]
    for i in range(nsamp):
        pp = p0
        qq = q0
        area = 0.0
        hsum = 0.0
        if nterms > 0:
            acc = 0.0
            for kterm in range(nterms):
                ph = marr[kterm] * wa * pp + narr[kterm] * wb * qq
                acc += cre[kterm] * math.cos(ph) - cim[kterm] * math.sin(ph)
            hsum = 0.5 * acc
        for m in range(1, nsteps):
            tau = r - (m - 1) * dt
            frac = dt / tau
            sd = hbar * math.sqrt(dt * (tau - dt) / tau)
            pn = pp + (p1 - pp) * frac + sd * normals[i, m - 1, 0]
            qn = qq + (q1 - qq) * frac + sd * normals[i, m - 1, 1]
            area += 0.5 * ((qn - qq) * (pn + pp) * 0.5 - (pn - pp) * (qn + qq) * 0.5)
            if nterms > 0:
                acc = 0.0
                for kterm in range(nterms):
                    ph = marr[kterm] * wa * pn + narr[kterm] * wb * qn
                    acc += cre[kterm] * math.cos(ph) - cim[kterm] * math.sin(ph)
                hsum += acc
            pp = pn
            qq = qn
        area += 0.5 * ((q1 - qq) * (p1 + pp) * 0.5 - (p1 - pp) * (q1 + qq) * 0.5)
        if nterms > 0:
            acc = 0.0
            for kterm in range(nterms):
                ph = marr[kterm] * wa * p1 + narr[kterm] * wb * q1
                acc += cre[kterm] * math.cos(ph) - cim[kterm] * math.sin(ph)
            hsum += 0.5 * acc
        action = area - t_over_r * hsum * dt
        w = action / hbar
        out_re[i] = math.cos(w)
        out_im[i] = math.sin(w)


def _symbol_values(p, q, marr, narr, cre, cim, wa, wb):
    if marr.shape[0] == 0:
        return np.zeros(np.shape(p))
    phase = (
        np.multiply.outer(p * wa, marr.astype(float))
        + np.multiply.outer(q * wb, narr.astype(float))
    )
    return np.cos(phase) @ cre - np.sin(phase) @ cim


def _phase_chunk_numpy(
    normals, p0, q0, p1, q1, r, hbar, t_over_r,
    marr, narr, cre, cim, wa, wb, out_re, out_im,
):
    nsamp = normals.shape[0]
    nsteps = normals.shape[1] + 1
    dt = r / nsteps
    pp = np.full(nsamp, p0)
    qq = np.full(nsamp, q0)
    area = np.zeros(nsamp)
    hsum = 0.5 * _symbol_values(pp, qq, marr, narr, cre, cim, wa, wb)
    for m in range(1, nsteps):
        tau = r - (m - 1) * dt
        frac = dt / tau
        sd = hbar * math.sqrt(dt * (tau - dt) / tau)
        pn = pp + (p1 - pp) * frac + sd * normals[:, m - 1, 0]
        qn = qq + (q1 - qq) * frac + sd * normals[:, m - 1, 1]
        area += 0.5 * ((qn - qq) * (pn + pp) * 0.5 - (pn - pp) * (qn + qq) * 0.5)
        hsum += _symbol_values(pn, qn, marr, narr, cre, cim, wa, wb)
        pp, qq = pn, qn
    area += 0.5 * ((q1 - qq) * (p1 + pp) * 0.5 - (p1 - pp) * (q1 + qq) * 0.5)
    hsum += 0.5 * _symbol_values(
        np.full(nsamp, p1), np.full(nsamp, q1), marr, narr, cre, cim, wa, wb
    )
    w = (area - t_over_r * hsum * dt) / hbar
    out_re[:] = np.cos(w)
    out_im[:] = np.sin(w)


def phase_chunk(
    normals, p0, q0, p1, q1, r, hbar, t,
    marr, narr, cre, cim, wa, wb,
):
    """cos/sin of S_r/hbar for one chunk of bridge samples."""
    nsamp = normals.shape[0]
    out_re = np.empty(nsamp)
    out_im = np.empty(nsamp)
    core = _phase_chunk_core if HAVE_NUMBA else _phase_chunk_numpy
    core(
        normals, p0, q0, p1, q1, r, hbar, t / r,
        marr, narr, cre, cim, wa, wb, out_re, out_im,
    )
    return out_re, out_im
