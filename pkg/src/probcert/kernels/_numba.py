"""Numba-jitted kernel backend: same functions as _numpy, loop-structured.

Compiled lazily on first use; results are cached on disk so repeat runs skip
compilation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

SQRT2 = 1.4142135623730951
INV_SQRT_2PI = 0.3989422804014327
DEGENERATE_NORM = 1e-12

AT_LOWER, AT_ZERO, AT_UPPER = 0, 1, 2


@njit(cache=True)
def _std_cdf(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit(cache=True)
def _std_pdf(x):
    return math.exp(-0.5 * x * x) * INV_SQRT_2PI


@njit(cache=True)
def ibp_bounds(tup, alpha, beta):
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     wz, wz_abs, wzt, wzt_abs, c, d, l0, u0, seg_off) = tup
    n0 = out_dims[0]
    l_flat = np.empty(seg_off[K])
    u_flat = np.empty(seg_off[K])

    cx = 0.5 * (l0 + u0)
    rx = 0.5 * (u0 - l0)
    cz = 0.5 * (alpha + beta)
    rz = 0.5 * (beta - alpha)
    W0 = w[w_off[0] : w_off[1]].reshape(n0, in_dims[0])
    Wa0 = wa[w_off[0] : w_off[1]].reshape(n0, in_dims[0])
    Wz = wz.reshape(n0, z_dim)
    Wza = wz_abs.reshape(n0, z_dim)
    cen = np.dot(W0, cx) + np.dot(Wz, cz) + b_flat[seg_off[0] : seg_off[1]]
    rad = np.dot(Wa0, rx) + np.dot(Wza, rz)
    for i in range(n0):
        l_flat[i] = cen[i] - rad[i]
        u_flat[i] = cen[i] + rad[i]

    for k in range(1, K):
        nin = out_dims[k - 1]
        nout = out_dims[k]
        chat = np.empty(nin)
        rhat = np.empty(nin)
        base = seg_off[k - 1]
        for i in range(nin):
            cl = max(l_flat[base + i], 0.0)
            cu = max(u_flat[base + i], 0.0)
            chat[i] = 0.5 * (cl + cu)
            rhat[i] = 0.5 * (cu - cl)
        Wk = w[w_off[k] : w_off[k + 1]].reshape(nout, nin)
        Wka = wa[w_off[k] : w_off[k + 1]].reshape(nout, nin)
        cen = np.dot(Wk, chat) + b_flat[seg_off[k] : seg_off[k + 1]]
        rad = np.dot(Wka, rhat)
        for i in range(nout):
            l_flat[seg_off[k] + i] = cen[i] - rad[i]
            u_flat[seg_off[k] + i] = cen[i] + rad[i]
    return l_flat, u_flat


@njit(cache=True)
def dual_terms(tup, l_flat, u_flat, lam_all):
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     wz, wz_abs, wzt, wzt_abs, c, d, l0, u0, seg_off) = tup
    n0 = out_dims[0]
    lam0 = lam_all[seg_off[0] : seg_off[1]]
    g = d
    for i in range(b_flat.shape[0]):
        g += b_flat[i] * lam_all[i]

    Wt0 = wt[w_off[0] : w_off[1]].reshape(in_dims[0], n0)
    nu0 = np.dot(Wt0, lam0)
    x0_star = np.empty(in_dims[0])
    for i in range(in_dims[0]):
        if nu0[i] * u0[i] >= nu0[i] * l0[i]:
            x0_star[i] = u0[i]
        else:
            x0_star[i] = l0[i]
        g += nu0[i] * x0_star[i]
    Wzt = wzt.reshape(z_dim, n0)
    zeta = np.dot(Wzt, lam0)

    xstar = np.empty(seg_off[K - 1])
    codes = np.empty(seg_off[K - 1], dtype=np.int8)
    for k in range(1, K):
        nin = out_dims[k - 1]
        nout = out_dims[k]
        lam_k = lam_all[seg_off[k] : seg_off[k + 1]]
        Wtk = wt[w_off[k] : w_off[k + 1]].reshape(nin, nout)
        nu = np.dot(Wtk, lam_k)
        base = seg_off[k - 1]
        for i in range(nin):
            lo = l_flat[base + i]
            hi = u_flat[base + i]
            lp = lam_all[base + i]
            v_lo = nu[i] * max(lo, 0.0) - lp * lo
            v_hi = nu[i] * max(hi, 0.0) - lp * hi
            best = v_lo
            code = AT_LOWER
            xs = lo
            if lo < 0.0 and hi > 0.0 and 0.0 >= best:
                best = 0.0
                code = AT_ZERO
                xs = 0.0
            if v_hi >= best:
                best = v_hi
                code = AT_UPPER
                xs = hi
            g += best
            xstar[base + i] = xs
            codes[base + i] = code
    return g, zeta, x0_star, xstar, codes


@njit(cache=True)
def _probability_parts(g, zeta, alpha, beta):
    acc = 0.0
    for i in range(zeta.shape[0]):
        acc += zeta[i] * zeta[i]
    s = math.sqrt(acc)
    if s < DEGENERATE_NORM:
        erfc_term = 1.0 if g >= 0.0 else 0.0
    else:
        erfc_term = _std_cdf(g / s)
    keep = 1.0
    for i in range(alpha.shape[0]):
        keep *= _std_cdf(beta[i]) - _std_cdf(alpha[i])
    return erfc_term, 1.0 - keep, s


@njit(cache=True)
def objective_value(tup, lam_free, alpha, eta):
    c = tup[14]
    K = tup[0]
    seg_off = tup[18]
    beta = alpha + eta * eta
    l_flat, u_flat = ibp_bounds(tup, alpha, beta)
    lam_all = np.empty(seg_off[K])
    lam_all[: seg_off[K - 1]] = lam_free
    lam_all[seg_off[K - 1] :] = c
    g, zeta, x0_star, xstar, codes = dual_terms(tup, l_flat, u_flat, lam_all)
    erfc_term, tail_term, s = _probability_parts(g, zeta, alpha, beta)
    return erfc_term + tail_term, erfc_term, tail_term, g, s


@njit(cache=True)
def objective_grad(tup, lam_free, alpha, eta):
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     wz, wz_abs, wzt, wzt_abs, c, d, l0, u0, seg_off) = tup
    n0 = out_dims[0]
    beta = alpha + eta * eta
    l_flat, u_flat = ibp_bounds(tup, alpha, beta)
    lam_all = np.empty(seg_off[K])
    lam_all[: seg_off[K - 1]] = lam_free
    lam_all[seg_off[K - 1] :] = c
    g, zeta, x0_star, xstar, codes = dual_terms(tup, l_flat, u_flat, lam_all)
    erfc_term, tail_term, s = _probability_parts(g, zeta, alpha, beta)

    if s < DEGENERATE_NORM:
        dg = 0.0
        ds = 0.0
    else:
        pdf = _std_pdf(g / s)
        dg = pdf / s
        ds = -pdf * g / (s * s)

    grad_lam = np.zeros(seg_off[K - 1])
    for k in range(K - 1):
        nout = out_dims[k]
        nin = in_dims[k]
        Wk = w[w_off[k] : w_off[k + 1]].reshape(nout, nin)
        if k == 0:
            h_prev = x0_star
        else:
            h_prev = np.empty(nin)
            base_prev = seg_off[k - 1]
            for i in range(nin):
                h_prev[i] = max(xstar[base_prev + i], 0.0)
        resid = np.dot(Wk, h_prev)
        base = seg_off[k]
        for i in range(nout):
            grad_lam[base + i] = dg * (resid[i] + b_flat[base + i] - xstar[base + i])
    if K > 1 and s >= DEGENERATE_NORM:
        Wz = wz.reshape(n0, z_dim)
        zn = zeta / s
        extra = np.dot(Wz, zn)
        for i in range(n0):
            grad_lam[i] += ds * extra[i]

    dl = np.zeros(seg_off[K])
    du = np.zeros(seg_off[K])
    for k in range(1, K):
        nin = out_dims[k - 1]
        nout = out_dims[k]
        lam_k = lam_all[seg_off[k] : seg_off[k + 1]]
        Wtk = wt[w_off[k] : w_off[k + 1]].reshape(nin, nout)
        nu = np.dot(Wtk, lam_k)
        base = seg_off[k - 1]
        for i in range(nin):
            code = codes[base + i]
            if code == AT_LOWER:
                slope = nu[i] if l_flat[base + i] > 0.0 else 0.0
                dl[base + i] = dg * (slope - lam_all[base + i])
            elif code == AT_UPPER:
                slope = nu[i] if u_flat[base + i] > 0.0 else 0.0
                du[base + i] = dg * (slope - lam_all[base + i])

    for k in range(K - 1, 0, -1):
        nin = out_dims[k - 1]
        nout = out_dims[k]
        base = seg_off[k]
        dcen = np.empty(nout)
        drad = np.empty(nout)
        for i in range(nout):
            dcen[i] = dl[base + i] + du[base + i]
            drad[i] = du[base + i] - dl[base + i]
        Wtk = wt[w_off[k] : w_off[k + 1]].reshape(nin, nout)
        Wtka = wta[w_off[k] : w_off[k + 1]].reshape(nin, nout)
        dchat = np.dot(Wtk, dcen)
        drhat = np.dot(Wtka, drad)
        prev = seg_off[k - 1]
        for i in range(nin):
            if l_flat[prev + i] > 0.0:
                dl[prev + i] += 0.5 * (dchat[i] - drhat[i])
            if u_flat[prev + i] > 0.0:
                du[prev + i] += 0.5 * (dchat[i] + drhat[i])

    dcen0 = np.empty(n0)
    drad0 = np.empty(n0)
    for i in range(n0):
        dcen0[i] = dl[i] + du[i]
        drad0[i] = du[i] - dl[i]
    Wzt = wzt.reshape(z_dim, n0)
    Wzta = wzt_abs.reshape(z_dim, n0)
    dcz = np.dot(Wzt, dcen0)
    drz = np.dot(Wzta, drad0)
    grad_alpha = np.empty(z_dim)
    grad_eta = np.empty(z_dim)
    for i in range(z_dim):
        grad_alpha[i] = dcz[i]
        grad_eta[i] = (dcz[i] + drz[i]) * eta[i]

    q = np.empty(z_dim)
    for i in range(z_dim):
        q[i] = _std_cdf(beta[i]) - _std_cdf(alpha[i])
    for i in range(z_dim):
        others = 1.0
        for j in range(z_dim):
            if j != i:
                others *= q[j]
        pb = _std_pdf(beta[i])
        pa = _std_pdf(alpha[i])
        grad_alpha[i] += -others * (pb - pa)
        grad_eta[i] += -others * pb * 2.0 * eta[i]

    obj = erfc_term + tail_term
    return obj, erfc_term, tail_term, g, s, grad_lam, grad_alpha, grad_eta
