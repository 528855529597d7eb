"""Compiled stream loops for the three learners.

The loops read windows straight out of a zero-padded history buffer ``h``:
with ``h = [0]*(m+1) ++ samples``, the window ending at sample ``t`` is
``h[m+1+t-k]`` for ``k = 0..m-1`` and the extended window adds ``k = m``.
State arrays are updated in place.  Loop ``t`` predicts ``samples[t+1]``
from the window ending at ``samples[t]``.

The fast-ONS state is kept column-wise: ``u`` is the first column of the
bottom block of the pre-array, ``[0; rho]``, and ``lam0``/``lam1`` are the
two columns of the width-2 factor.
"""

import math

import numpy as np
from numba import njit

OK = 0
BREAKDOWN = 1
DIVERGED = 2


@njit(cache=True, inline="always")
def _sign(e, eps):
    if not abs(e) > eps:
        return 0.0
    return 1.0 if e > 0 else -1.0


@njit(cache=True, inline="always")
def _dot_window(h, base, v, m):
    acc = 0.0
    for k in range(m):
        acc += v[k] * h[base - k]
    return acc


@njit(cache=True, inline="always")
def ogd_step(h, base, m, target, w, inv_mu, eps):
    pred = _dot_window(h, base, w, m)
    e = target - pred
    sgn = _sign(e, eps)
    if sgn != 0.0:
        scale = sgn * inv_mu
        for k in range(m):
            w[k] += scale * h[base - k]
    return pred, e


@njit(cache=True, inline="always")
def ons_step(h, base, m, target, w, a_inv, g, inv_mu, eps):
    """Returns (prediction, error, eta); eta <= 0 flags divergence."""
    pred = _dot_window(h, base, w, m)
    e = target - pred
    # g = a_inv @ x via rows of the symmetric a_inv; 2-D indexing avoids
    # per-row view objects
    for i in range(m):
        g[i] = 0.0
    for j in range(m):
        xj = h[base - j]
        if xj != 0.0:
            for i in range(m):
                g[i] += a_inv[j, i] * xj
    eta = 1.0
    for j in range(m):
        eta += g[j] * h[base - j]
    if not eta > 0.0:
        return pred, e, eta
    inv_eta = 1.0 / eta
    for i in range(m):
        gi = g[i]
        if gi != 0.0:
            for j in range(m):
                a_inv[i, j] -= (gi * g[j]) * inv_eta
    sgn = _sign(e, eps)
    if sgn != 0.0:
        scale = sgn * inv_mu * inv_eta
        for k in range(m):
            w[k] += scale * g[k]
    return pred, e, eta


@njit(cache=True, inline="always")
def fast_ons_step(h, base, m, target, w, sqrt_eta, u, lam0, lam1, inv_mu, eps, tol):
    """Returns (prediction, error, new sqrt_eta); a non-positive sqrt_eta flags breakdown.

    On breakdown the state arrays may be partially rotated and must be rebuilt.
    """
    pred = _dot_window(h, base, w, m)
    e = target - pred

    a0 = sqrt_eta
    a1 = 0.0
    a2 = 0.0
    for k in range(m + 1):
        xk = h[base - k]
        a1 += xk * lam0[k]
        a2 += xk * lam1[k]

    # Givens on (u, lam0) zeroing a1
    if a1 != 0.0 or a0 <= 0.0:
        r = math.hypot(a0, a1)
        inv_r = 1.0 / r
        c = a0 * inv_r
        s = a1 * inv_r
        for k in range(m + 1):
            uk = u[k]
            lk = lam0[k]
            u[k] = c * uk + s * lk
            lam0[k] = -s * uk + c * lk
    else:
        r = a0

    # hyperbolic on (u, lam1) zeroing a2
    if a2 != 0.0:
        b = abs(a2)
        gap = (r - b) * (r + b)
        if not gap > tol * max(1.0, r * r):
            return pred, e, -1.0
        rr = math.sqrt(gap)
        inv_rr = 1.0 / rr
        ch = r * inv_rr
        sh = a2 * inv_rr
        for k in range(m + 1):
            uk = u[k]
            lk = lam1[k]
            u[k] = ch * uk - sh * lk
            lam1[k] = -sh * uk + ch * lk
        r = rr

    sgn = _sign(e, eps)
    if sgn != 0.0:
        scale = sgn * inv_mu / r
        for k in range(m):
            w[k] += scale * u[k]
    # [rho; 0] -> [0; rho] for the next pre-array
    for k in range(m, 0, -1):
        u[k] = u[k - 1]
    u[0] = 0.0
    return pred, e, r


@njit(cache=True)
def run_ogd(h, m, n, start, w, inv_mu, eps, preds, errors):
    for t in range(start, n - 1):
        base = m + 1 + t
        preds[t], errors[t] = ogd_step(h, base, m, h[base + 1], w, inv_mu, eps)
    return OK, n - 1


@njit(cache=True)
def run_ons(h, m, n, start, w, a_inv, inv_mu, eps, preds, errors):
    g = np.zeros(m, dtype=w.dtype)
    for t in range(start, n - 1):
        base = m + 1 + t
        pred, e, eta = ons_step(h, base, m, h[base + 1], w, a_inv, g, inv_mu, eps)
        preds[t] = pred
        errors[t] = e
        if not eta > 0.0:
            return DIVERGED, t
    return OK, n - 1


@njit(cache=True)
def run_fast_ons(h, m, n, start, w, state, u, lam0, lam1, inv_mu, eps, tol, preds, errors):
    """``state[0]`` holds sqrt_eta."""
    for t in range(start, n - 1):
        base = m + 1 + t
        pred, e, r = fast_ons_step(h, base, m, h[base + 1], w, state[0], u, lam0, lam1, inv_mu, eps, tol)
        preds[t] = pred
        errors[t] = e
        if not r > 0.0:
            return BREAKDOWN, t
        state[0] = r
    return OK, n - 1


@njit(cache=True)
def run_lockstep(h, m, n, w_r, a_inv, w_f, u, lam0, lam1, inv_mu, eps, tol, weight_tol, out_errors_r, out_errors_f, stats):
    """Regular and fast ONS side by side.

    ``stats`` receives [max |dw|, max |dpred|, max |deta|, first step with
    |dw| > weight_tol (or -1), status, stop step].
    """
    g = np.zeros(m, dtype=w_r.dtype)
    sqrt_eta = 1.0
    max_dw = 0.0
    max_dp = 0.0
    max_deta = 0.0
    first = -1
    stats[4] = OK
    stats[5] = n - 1
    for t in range(n - 1):
        base = m + 1 + t
        target = h[base + 1]
        pr, er, eta = ons_step(h, base, m, target, w_r, a_inv, g, inv_mu, eps)
        pf, ef, r = fast_ons_step(h, base, m, target, w_f, sqrt_eta, u, lam0, lam1, inv_mu, eps, tol)
        out_errors_r[t] = er
        out_errors_f[t] = ef
        if not eta > 0.0:
            stats[4] = DIVERGED
            stats[5] = t
            break
        if not r > 0.0:
            stats[4] = BREAKDOWN
            stats[5] = t
            break
        sqrt_eta = r
        dp = abs(pr - pf)
        if dp > max_dp:
            max_dp = dp
        de = abs(r * r - eta)
        if de > max_deta:
            max_deta = de
        dw = 0.0
        for k in range(m):
            d = abs(w_r[k] - w_f[k])
            if d > dw:
                dw = d
        if dw > max_dw:
            max_dw = dw
        if first < 0 and dw > weight_tol:
            first = t
    stats[0] = max_dw
    stats[1] = max_dp
    stats[2] = max_deta
    stats[3] = first
