"""Adaptive Dormand-Prince 4(5) propagation of psi under the effective Hamiltonian.

The generator is  f(t, y) = diag * y + sum_k c_kind(k)(t) * y[col(k)]  with the
off-diagonal pattern in CSR form and c_ge = -i Omega_ge(t), c_er = -i Omega_er.
`advance` integrates until a target time or until |y|^2 falls to a jump
threshold, locating the crossing by bisection on the continuous extension.
"""

from __future__ import annotations

import numba
import numpy as np

from .pulses import omega_ge_profile

# status codes returned by advance()
REACHED = 0
CROSSED = 1
UNDERFLOW = 2

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension (Shampine), y(t0 + th) = y0 + h * K^T P [th, th^2, th^3, th^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
BISECTION_RTOL = 1e-6


@numba.njit(cache=True)
def rhs(t, y, out, diag, indptr, indices, kinds, omega_er, pulse):
    peak, t0, tr, th, tf, tanh = pulse
    c0 = -1j * omega_ge_profile(t, peak, t0, tr, th, tf, tanh != 0.0)
    c1 = -1j * omega_er
    for i in range(y.shape[0]):
        acc = diag[i] * y[i]
        for k in range(indptr[i], indptr[i + 1]):
            if kinds[k] == 0:
                acc += c0 * y[indices[k]]
            else:
                acc += c1 * y[indices[k]]
        out[i] = acc


@numba.njit(cache=True)
def _norm2(y):
    s = 0.0
    for i in range(y.shape[0]):
        s += y[i].real * y[i].real + y[i].imag * y[i].imag
    return s


@numba.njit(cache=True)
def _dense(y0, K, h, theta, out):
    t1 = theta
    t2 = t1 * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(y0.shape[0]):
        acc = 0.0j
        for s in range(7):
            q = _P[s, 0] * t1 + _P[s, 1] * t2 + _P[s, 2] * t3 + _P[s, 3] * t4
            if q != 0.0:
                acc += K[s, i] * q
        out[i] = y0[i] + h * acc


@numba.njit(cache=True)
def advance(
    y, t, t_end, h, threshold, diag, indptr, indices, kinds, omega_er, pulse, rtol, atol, hmax, hmin
):
    """Propagate y in place from t toward t_end.

    Returns (t_reached, h_next, status, accepted_steps, rejected_steps, max_norm_rise).
    On CROSSED, y holds the state at the located crossing time.
    """
    n = y.shape[0]
    K = np.empty((7, n), dtype=np.complex128)
    ytmp = np.empty(n, dtype=np.complex128)
    ynew = np.empty(n, dtype=np.complex128)
    rhs(t, y, K[0], diag, indptr, indices, kinds, omega_er, pulse)
    nacc = 0
    nrej = 0
    max_rise = 0.0
    norm_old = _norm2(y)
    if h <= 0.0:
        h = hmax
    while t < t_end:
        hs = min(h, hmax)
        last = False
        if t + hs >= t_end:
            hs = t_end - t
            last = True
        if hs < hmin and not last:
            return t, h, UNDERFLOW, nacc, nrej, max_rise
        for s in range(1, 6):
            for i in range(n):
                acc = 0.0j
                for q in range(s):
                    if _A[s, q] != 0.0:
                        acc += _A[s, q] * K[q, i]
                ytmp[i] = y[i] + hs * acc
            rhs(t + _C[s] * hs, ytmp, K[s], diag, indptr, indices, kinds, omega_er, pulse)
        for i in range(n):
            acc = 0.0j
            for q in range(6):
                if _B[q] != 0.0:
                    acc += _B[q] * K[q, i]
            ynew[i] = y[i] + hs * acc
        t_new = t_end if last else t + hs
        rhs(t_new, ynew, K[6], diag, indptr, indices, kinds, omega_er, pulse)
        err = 0.0
        for i in range(n):
            e = 0.0j
            for q in range(7):
                if _E[q] != 0.0:
                    e += _E[q] * K[q, i]
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            r = abs(hs * e) / sc
            if r > err:
                err = r
        if err <= 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err**-0.2)
            norm_new = _norm2(ynew)
            if norm_new > norm_old:
                max_rise = max(max_rise, norm_new - norm_old)
            nacc += 1
            if norm_new <= threshold:
                # crossing inside [t, t_new]: bisection on the continuous extension
                lo = 0.0
                hi = 1.0
                while hi - lo > BISECTION_RTOL:
                    mid = 0.5 * (lo + hi)
                    _dense(y, K, hs, mid, ytmp)
                    if _norm2(ytmp) > threshold:
                        lo = mid
                    else:
                        hi = mid
                _dense(y, K, hs, hi, ytmp)
                y[:] = ytmp
                return t + hi * hs, hs, CROSSED, nacc, nrej, max_rise
            y[:] = ynew
            K[0, :] = K[6]
            t = t_new
            norm_old = norm_new
            if not last or hs * factor > h:
                h = hs * factor
        else:
            nrej += 1
            h = hs * max(MIN_FACTOR, SAFETY * err**-0.2)
    return t, h, REACHED, nacc, nrej, max_rise
