"""Jit-compiled adaptive integrator for the Hill equation and its z-derivative.

Integrates the 8-component linear system for the Neumann and Dirichlet
solutions of ``-u'' + V u = z u`` together with the variational columns
``-w'' + V w = z w + u`` (so the energy derivative of the monodromy matrix
comes out of the same pass).  Cash-Karp 5(4) embedded pair with a PI-free
step controller; the step is capped externally to resolve oscillation.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_UNDERFLOW = -1

# Cash-Karp tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [3 / 10, -9 / 10, 6 / 5, 0.0, 0.0],
        [-11 / 54, 5 / 2, -70 / 27, 35 / 27, 0.0],
        [1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096],
    ]
)
_B = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
# 5th-order minus embedded 4th-order weights (local error estimate)
_E = np.array([-277 / 64512, 0.0, 6925 / 370944, -6925 / 202752, -277 / 14336, 277 / 7084])


@njit(cache=True)
def _rhs(x, y, omegas, coeffs, z, out):
    v = coeffs[0]
    for j in range(1, coeffs.shape[0]):
        v += coeffs[j] * np.cos(omegas[j] * x)
    c = v - z
    # y = [u1, u1', u2, u2', w1, w1', w2, w2']
    out[0] = y[1]
    out[1] = c * y[0]
    out[2] = y[3]
    out[3] = c * y[2]
    out[4] = y[5]
    out[5] = c * y[4] - y[0]
    out[6] = y[7]
    out[7] = c * y[6] - y[2]


@njit(cache=True)
def integrate_hill(z, coeffs, period, hcap, atol, rtol, amat, bvec, evec, cvec):
    y = np.zeros(8)
    y[0] = 1.0
    y[3] = 1.0
    omegas = np.empty(coeffs.shape[0])
    for j in range(coeffs.shape[0]):
        omegas[j] = 2.0 * np.pi * j / period
    k = np.zeros((6, 8))
    ytmp = np.empty(8)
    ynew = np.empty(8)
    x = 0.0
    h = hcap
    hmin = 1e-14 * period
    nsteps = 0
    while x < period:
        if h > period - x:
            h = period - x
        _rhs(x, y, omegas, coeffs, z, k[0])
        for s in range(1, 6):
            for i in range(8):
                acc = 0.0
                for q in range(s):
                    acc += amat[s, q] * k[q, i]
                ytmp[i] = y[i] + h * acc
            _rhs(x + cvec[s] * h, ytmp, omegas, coeffs, z, k[s])
        errn = 0.0
        for i in range(8):
            dy = 0.0
            de = 0.0
            for s in range(6):
                dy += bvec[s] * k[s, i]
                de += evec[s] * k[s, i]
            ynew[i] = y[i] + h * dy
            scale = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            r = h * de / scale
            errn += r * r
        errn = np.sqrt(errn / 8.0)
        if errn <= 1.0:
            x += h
            for i in range(8):
                y[i] = ynew[i]
            nsteps += 1
        if errn > 0.0:
            fac = 0.9 * errn ** (-0.2)
        else:
            fac = 5.0
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        h = h * fac
        if h > hcap:
            h = hcap
        if h < hmin:
            return y, STATUS_UNDERFLOW, nsteps
    return y, STATUS_OK, nsteps


def hill_endpoint(z: float, coeffs: np.ndarray, period: float, hcap: float, atol: float, rtol: float):
    """One-period solution values ``[u1, u1', u2, u2', w1, w1', w2, w2']`` at x = p."""
    return integrate_hill(float(z), coeffs, float(period), float(hcap), float(atol), float(rtol),
                          _A, _B, _E, _C)
