"""Compiled circuit executor and Pauli-string expectations.

Mirrors the numpy kernels in :mod:`xyvqe.qstate`; those stay the reference
implementation and the tests compare the two paths gate by gate.
"""

from __future__ import annotations

import math

import numba
import numpy as np

OP_RY, OP_RZ, OP_RX, OP_CNOT, OP_CRX, OP_RXX, OP_RYY = range(7)
OPCODES = {"RY": OP_RY, "RZ": OP_RZ, "RX": OP_RX, "CNOT": OP_CNOT, "CRX": OP_CRX, "RXX": OP_RXX, "RYY": OP_RYY}


@numba.njit(cache=True)
def _apply_1q(psi, u00, u01, u10, u11, t, cmask):
    bit = 1 << t
    for b in range(psi.shape[0]):
        if b & bit or (b & cmask) != cmask:
            continue
        a0 = psi[b]
        a1 = psi[b | bit]
        psi[b] = u00 * a0 + u01 * a1
        psi[b | bit] = u10 * a0 + u11 * a1


@numba.njit(cache=True)
def _apply_pair_rotation(psi, angle, i, j, yy):
    c = math.cos(angle / 2)
    s = math.sin(angle / 2)
    bi = 1 << i
    bj = 1 << j
    m = bi | bj
    for b in range(psi.shape[0]):
        if b & m:
            continue
        # group {b, b|bi, b|bj, b|m}; XX or YY swaps b<->b|m and b|bi<->b|bj
        b01 = b | bi
        b10 = b | bj
        b11 = b | m
        a00 = psi[b]
        a01 = psi[b01]
        a10 = psi[b10]
        a11 = psi[b11]
        sg = -1.0 if yy else 1.0
        psi[b] = c * a00 - 1j * s * sg * a11
        psi[b11] = c * a11 - 1j * s * sg * a00
        psi[b01] = c * a01 - 1j * s * a10
        psi[b10] = c * a10 - 1j * s * a01


@numba.njit(cache=True)
def run_program(ops, qa, qb, slots, params, n):
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    for k in range(ops.shape[0]):
        op = ops[k]
        if op == OP_CNOT:
            _apply_1q(psi, 0j, 1 + 0j, 1 + 0j, 0j, qb[k], 1 << qa[k])
            continue
        theta = params[slots[k]]
        c = math.cos(theta / 2)
        s = math.sin(theta / 2)
        if op == OP_RY:
            _apply_1q(psi, c + 0j, -s + 0j, s + 0j, c + 0j, qa[k], 0)
        elif op == OP_RZ:
            e = complex(c, -s)
            _apply_1q(psi, e, 0j, 0j, e.conjugate(), qa[k], 0)
        elif op == OP_RX:
            _apply_1q(psi, c + 0j, -1j * s, -1j * s, c + 0j, qa[k], 0)
        elif op == OP_CRX:
            _apply_1q(psi, c + 0j, -1j * s, -1j * s, c + 0j, qb[k], 1 << qa[k])
        elif op == OP_RXX:
            _apply_pair_rotation(psi, theta, qa[k], qb[k], False)
        else:
            _apply_pair_rotation(psi, theta, qa[k], qb[k], True)
    return psi


@numba.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@numba.njit(cache=True)
def pauli_expectations(psi, xmask, yzmask, ny):
    """<psi|P_k|psi> for strings encoded as (flip mask, Y|Z mask, Y count).

    P|b> = i^ny (-1)^popcount(b & yzmask) |b ^ xmask>, where the flip mask
    holds the X and Y positions.
    """
    out = np.zeros(xmask.shape[0])
    for k in range(xmask.shape[0]):
        acc = 0j
        for b in range(psi.shape[0]):
            term = psi[b] * np.conj(psi[b ^ xmask[k]])
            if _popcount(b & yzmask[k]) & 1:
                acc -= term
            else:
                acc += term
        phase = ny[k] % 4
        if phase == 0:
            out[k] = acc.real
        elif phase == 1:
            out[k] = -acc.imag
        elif phase == 2:
            out[k] = -acc.real
        else:
            out[k] = acc.imag
    return out
