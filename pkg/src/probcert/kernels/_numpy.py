"""Pure-numpy kernel backend.

Vectorized per layer; mirrors the numba backend function-for-function.  The
two backends must agree to floating-point noise — the benchmark and the
backend-agreement tests compare them directly.
"""

from __future__ import annotations

import math

import numpy as np

SQRT2 = 1.4142135623730951
INV_SQRT_2PI = 0.3989422804014327
DEGENERATE_NORM = 1e-12

# argmax codes recorded by the per-neuron maximization
AT_LOWER, AT_ZERO, AT_UPPER = 0, 1, 2


def _std_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def _std_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) * INV_SQRT_2PI


def _mats_from(buf, tup, transposed=False):
    K, _z, in_dims, out_dims, _w, _wa, _wt, _wta, w_off = tup[:9]
    out = []
    for k in range(K):
        r, c = (in_dims[k], out_dims[k]) if transposed else (out_dims[k], in_dims[k])
        out.append(buf[w_off[k] : w_off[k + 1]].reshape(r, c))
    return out


def ibp_bounds(tup, alpha, beta):
    """Interval propagation: pre-activation boxes for every linear layer.

    Valid for every u in the free box and z in [alpha, beta]; linear layers
    propagate center/radius, ReLU clips elementwise.  Overflow yields infs
    that callers detect; suppress the numpy warnings the jitted twin never
    emits.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _ibp_bounds(tup, alpha, beta)


def _ibp_bounds(tup, alpha, beta):
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     wz, wz_abs, _wzt, _wzt_abs, _c, _d, l0, u0, seg_off) = tup
    W = _mats_from(w, tup)
    Wa = _mats_from(wa, tup)
    Wz = wz.reshape(out_dims[0], z_dim)
    Wza = wz_abs.reshape(out_dims[0], z_dim)

    l_flat = np.empty(seg_off[K])
    u_flat = np.empty(seg_off[K])

    cx = 0.5 * (l0 + u0)
    rx = 0.5 * (u0 - l0)
    cz = 0.5 * (alpha + beta)
    rz = 0.5 * (beta - alpha)
    cen = W[0] @ cx + Wz @ cz + b_flat[seg_off[0] : seg_off[1]]
    rad = Wa[0] @ rx + Wza @ rz
    l_flat[seg_off[0] : seg_off[1]] = cen - rad
    u_flat[seg_off[0] : seg_off[1]] = cen + rad

    for k in range(1, K):
        lo = l_flat[seg_off[k - 1] : seg_off[k]]
        hi = u_flat[seg_off[k - 1] : seg_off[k]]
        cl = np.maximum(lo, 0.0)
        cu = np.maximum(hi, 0.0)
        cen = W[k] @ (0.5 * (cl + cu)) + b_flat[seg_off[k] : seg_off[k + 1]]
        rad = Wa[k] @ (0.5 * (cu - cl))
        l_flat[seg_off[k] : seg_off[k + 1]] = cen - rad
        u_flat[seg_off[k] : seg_off[k + 1]] = cen + rad
    return l_flat, u_flat


def dual_terms(tup, l_flat, u_flat, lam_all):
    """Evaluate the z-free dual value g, the latent coefficient, and argmaxes.

    lam_all holds every multiplier segment including the final one pinned to
    the specification coefficients.  Returns (g, zeta, x0_star, xstar, codes)
    where xstar/codes record the per-neuron maximizer for segments 0..K-2.
    """
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     _wz, _wz_abs, wzt, _wzt_abs, _c, d, l0, u0, seg_off) = tup
    Wt = _mats_from(wt, tup, transposed=True)
    Wzt = wzt.reshape(z_dim, out_dims[0])

    lam0 = lam_all[seg_off[0] : seg_off[1]]
    g = d + float(b_flat @ lam_all)
    nu0 = Wt[0] @ lam0
    x0_star = np.where(nu0 * u0 >= nu0 * l0, u0, l0)
    g += float(nu0 @ x0_star)
    zeta = Wzt @ lam0

    xstar = np.empty(seg_off[K - 1])
    codes = np.empty(seg_off[K - 1], dtype=np.int8)
    for k in range(1, K):
        lam_k = lam_all[seg_off[k] : seg_off[k + 1]]
        lam_prev = lam_all[seg_off[k - 1] : seg_off[k]]
        nu = Wt[k] @ lam_k
        lo = l_flat[seg_off[k - 1] : seg_off[k]]
        hi = u_flat[seg_off[k - 1] : seg_off[k]]
        v_lo = nu * np.maximum(lo, 0.0) - lam_prev * lo
        v_hi = nu * np.maximum(hi, 0.0) - lam_prev * hi
        has_zero = (lo < 0.0) & (hi > 0.0)
        # candidates in ascending x order; ties resolved to the largest x
        best = v_lo.copy()
        code = np.full(lo.shape, AT_LOWER, dtype=np.int8)
        take0 = has_zero & (0.0 >= best)
        best[take0] = 0.0
        code[take0] = AT_ZERO
        takeu = v_hi >= best
        best[takeu] = v_hi[takeu]
        code[takeu] = AT_UPPER
        g += float(best.sum())
        seg = slice(seg_off[k - 1], seg_off[k])
        xstar[seg] = np.where(code == AT_UPPER, hi, np.where(code == AT_ZERO, 0.0, lo))
        codes[seg] = code
    return g, zeta, x0_star, xstar, codes


def _probability_parts(g, zeta, alpha, beta):
    s = float(np.linalg.norm(zeta))
    if s < DEGENERATE_NORM:
        erfc_term = 1.0 if g >= 0.0 else 0.0
    else:
        erfc_term = _std_cdf(g / s)
    keep = 1.0
    for i in range(alpha.shape[0]):
        keep *= _std_cdf(beta[i]) - _std_cdf(alpha[i])
    return erfc_term, 1.0 - keep, s


def objective_value(tup, lam_free, alpha, eta):
    """Unclamped certificate objective: erfc term + latent-box complement."""
    c = tup[14]
    beta = alpha + eta * eta
    l_flat, u_flat = ibp_bounds(tup, alpha, beta)
    lam_all = np.concatenate([lam_free, c])
    g, zeta, _x0, _xs, _codes = dual_terms(tup, l_flat, u_flat, lam_all)
    erfc_term, tail_term, s = _probability_parts(g, zeta, alpha, beta)
    return erfc_term + tail_term, erfc_term, tail_term, g, s


def objective_grad(tup, lam_free, alpha, eta):
    """Objective plus exact (sub)gradients wrt the multipliers, alpha, eta.

    Gradients flow through the per-neuron maxima (at the recorded argmax),
    the erfc/normal-CDF formulas, the latent-coefficient norm, and the
    interval propagation's dependence on the latent box.
    """
    (K, z_dim, in_dims, out_dims, w, wa, wt, wta, w_off, b_flat,
     wz, _wz_abs, wzt, wzt_abs, c, d, l0, u0, seg_off) = tup
    W = _mats_from(w, tup)
    Wt = _mats_from(wt, tup, transposed=True)
    Wta = _mats_from(wta, tup, transposed=True)
    Wz = wz.reshape(out_dims[0], z_dim)
    Wzt = wzt.reshape(z_dim, out_dims[0])
    Wzta = wzt_abs.reshape(z_dim, out_dims[0])

    beta = alpha + eta * eta
    l_flat, u_flat = ibp_bounds(tup, alpha, beta)
    lam_all = np.concatenate([lam_free, c])
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
        seg = slice(seg_off[k], seg_off[k + 1])
        h_prev = x0_star if k == 0 else np.maximum(xstar[seg_off[k - 1] : seg_off[k]], 0.0)
        grad_lam[seg] = dg * (W[k] @ h_prev + b_flat[seg] - xstar[seg])
    if K > 1 and s >= DEGENERATE_NORM:
        grad_lam[seg_off[0] : seg_off[1]] += ds * (Wz @ (zeta / s))

    # adjoints of the pre-activation bounds consumed by the maximizations
    dl = np.zeros(seg_off[K])
    du = np.zeros(seg_off[K])
    for k in range(1, K):
        seg = slice(seg_off[k - 1], seg_off[k])
        lam_k = lam_all[seg_off[k] : seg_off[k + 1]]
        lam_prev = lam_all[seg]
        nu = Wt[k] @ lam_k
        lo = l_flat[seg]
        hi = u_flat[seg]
        code = codes[seg]
        dl[seg] = np.where(code == AT_LOWER, dg * (nu * (lo > 0.0) - lam_prev), 0.0)
        du[seg] = np.where(code == AT_UPPER, dg * (nu * (hi > 0.0) - lam_prev), 0.0)

    # backprop the interval propagation down to the latent box
    for k in range(K - 1, 0, -1):
        seg = slice(seg_off[k], seg_off[k + 1])
        prev = slice(seg_off[k - 1], seg_off[k])
        dcen = dl[seg] + du[seg]
        drad = du[seg] - dl[seg]
        dchat = Wt[k] @ dcen
        drhat = Wta[k] @ drad
        dl[prev] += (l_flat[prev] > 0.0) * 0.5 * (dchat - drhat)
        du[prev] += (u_flat[prev] > 0.0) * 0.5 * (dchat + drhat)
    seg = slice(seg_off[0], seg_off[1])
    dcz = Wzt @ (dl[seg] + du[seg])
    drz = Wzta @ (du[seg] - dl[seg])
    grad_alpha = dcz.copy()
    grad_eta = (dcz + drz) * eta

    # latent-box complement probability, differentiated directly
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
