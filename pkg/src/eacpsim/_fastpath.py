"""Compiled inner loop for analytic-backend evolution.

The generic path in :mod:`eacpsim.mclachlan` re-assembles the variational
system through Python-level calls four times per step, which dominates
ensemble runtimes.  This kernel performs the identical computation (closed
form ansatz derivatives, A = D* D^T, normal-equation Tikhonov solve, RK4 with
stage-time driving forces) in one numba-compiled function.  Agreement with
the generic path is covered by tests; ensembles always use this path, so
results are deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _driving_force(t, omega, coupling, x0, p0_over_mw):
    f = 0.0
    for j in range(omega.size):
        wt = omega[j] * t
        f += coupling[j] * (x0[j] * np.cos(wt) + p0_over_mw[j] * np.sin(wt))
    return f


@njit(cache=True)
def _theta_rate(theta, f, omega_rabi, epsilon, lam, out):
    """Assemble A^R, C^I from the closed-form derivative amplitudes and solve
    (A^T A + lam I) x = A^T C by Gaussian elimination with partial pivoting."""
    c = np.cos(0.5 * theta[2])
    s = np.sin(0.5 * theta[2])
    phase0 = np.exp(1j * (theta[0] - 0.5 * theta[1] - 0.5 * theta[3]))
    phase1 = np.exp(1j * (theta[0] + 0.5 * theta[1] - 0.5 * theta[3]))
    a0 = phase0 * c
    a1 = -1j * phase1 * s

    derivs = np.empty((4, 2), dtype=np.complex128)
    derivs[0, 0] = 1j * a0
    derivs[0, 1] = 1j * a1
    derivs[1, 0] = -0.5j * a0
    derivs[1, 1] = 0.5j * a1
    derivs[2, 0] = -0.5 * phase0 * s
    derivs[2, 1] = -0.5j * phase1 * c
    derivs[3, 0] = -0.5j * a0
    derivs[3, 1] = -0.5j * a1

    g = epsilon - f
    h0 = omega_rabi * a1 + g * a0
    h1 = omega_rabi * a0 - g * a1

    a_real = np.empty((4, 4))
    c_imag = np.empty(4)
    for i in range(4):
        di0 = np.conj(derivs[i, 0])
        di1 = np.conj(derivs[i, 1])
        for j in range(4):
            a_real[i, j] = (di0 * derivs[j, 0] + di1 * derivs[j, 1]).real
        c_imag[i] = (di0 * h0 + di1 * h1).imag

    gram = np.empty((4, 4))
    rhs = np.empty(4)
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc += a_real[k, i] * a_real[k, j]
            gram[i, j] = acc
        acc = 0.0
        for k in range(4):
            acc += a_real[k, i] * c_imag[k]
        rhs[i] = acc
        gram[i, i] += lam

    # LU with partial pivoting on the 4x4 gram matrix
    for col in range(4):
        piv = col
        best = abs(gram[col, col])
        for row in range(col + 1, 4):
            if abs(gram[row, col]) > best:
                best = abs(gram[row, col])
                piv = row
        if piv != col:
            for k in range(4):
                tmp = gram[col, k]
                gram[col, k] = gram[piv, k]
                gram[piv, k] = tmp
            tmp = rhs[col]
            rhs[col] = rhs[piv]
            rhs[piv] = tmp
        pivot = gram[col, col]
        for row in range(col + 1, 4):
            factor = gram[row, col] / pivot
            if factor != 0.0:
                for k in range(col, 4):
                    gram[row, k] -= factor * gram[col, k]
                rhs[row] -= factor * rhs[col]
    for row in range(3, -1, -1):
        acc = rhs[row]
        for k in range(row + 1, 4):
            acc -= gram[row, k] * out[k]
        out[row] = acc / gram[row, row]


@njit(cache=True)
def evolve_analytic_kernel(
    theta0, n_steps, dt, lam, omega, coupling, x0, p0_over_mw, omega_rabi, epsilon
):
    """RK4 over theta with per-stage driving forces.

    Returns (thetas, p1, p2, n_ok) where n_ok is the number of completed
    steps; n_ok < n_steps signals a non-finite abort at step n_ok.
    """
    thetas = np.empty((n_steps + 1, 4))
    p1 = np.empty(n_steps + 1)
    p2 = np.empty(n_steps + 1)
    theta = theta0.copy()
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    stage = np.empty(4)

    for i in range(4):
        thetas[0, i] = theta[i]
    ch = np.cos(0.5 * theta[2])
    sh = np.sin(0.5 * theta[2])
    p1[0] = ch * ch
    p2[0] = sh * sh

    for step in range(n_steps):
        t = step * dt
        f_a = _driving_force(t, omega, coupling, x0, p0_over_mw)
        f_b = _driving_force(t + 0.5 * dt, omega, coupling, x0, p0_over_mw)
        f_c = _driving_force(t + dt, omega, coupling, x0, p0_over_mw)

        _theta_rate(theta, f_a, omega_rabi, epsilon, lam, k1)
        for i in range(4):
            stage[i] = theta[i] + 0.5 * dt * k1[i]
        _theta_rate(stage, f_b, omega_rabi, epsilon, lam, k2)
        for i in range(4):
            stage[i] = theta[i] + 0.5 * dt * k2[i]
        _theta_rate(stage, f_b, omega_rabi, epsilon, lam, k3)
        for i in range(4):
            stage[i] = theta[i] + dt * k3[i]
        _theta_rate(stage, f_c, omega_rabi, epsilon, lam, k4)

        ok = True
        for i in range(4):
            incr = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]
            if not np.isfinite(incr):
                ok = False
                break
            theta[i] = theta[i] + (dt / 6.0) * incr
        if not ok:
            return thetas, p1, p2, step

        for i in range(4):
            thetas[step + 1, i] = theta[i]
        ch = np.cos(0.5 * theta[2])
        sh = np.sin(0.5 * theta[2])
        p1[step + 1] = ch * ch
        p2[step + 1] = sh * sh
    return thetas, p1, p2, n_steps
