"""Numba @njit twins of the hot kernels in ``_kernels_numpy``.

Loop transcriptions of the same arithmetic, compiled lazily with caching.
Only the genuinely hot O(N^2)/O(M^2)/stencil kernels live here; cheap
elementwise helpers stay in the numpy module and are shared.
"""

import numpy as np
from numba import njit

from ._kernels_numpy import (
    POT_NONE,
    POT_LOG_BUMP,
    POT_CUCKER_DONG,
    _BUMP_LO,
    _BUMP_HI,
    _LOG_SHIFT,
)


@njit(cache=True, inline="always")
def _disp(a, b):
    # precondition everywhere in this module: a, b already lie in [0, 1)
    r = a - b
    if r > 0.5:
        r -= 1.0
    elif r <= -0.5:
        r += 1.0
    return r


@njit(cache=True, inline="always")
def _influence_scalar(d, lam, c_lam, eps2):
    base = c_lam * d * d
    if eps2 == 0.0:
        base += 1.0
    else:
        base += eps2
    # the common exponents avoid the generic pow, which dominates the
    # pairwise loops otherwise
    if lam == 1.0:
        return 1.0 / np.sqrt(base)
    if lam == 2.0:
        return 1.0 / base
    return base ** (-lam / 2.0)


@njit(cache=True, inline="always")
def _smoothstep_pair(s):
    # returns (S(s), S'(s))
    if s <= 0.0:
        return 0.0, 0.0
    if s >= 1.0:
        return 1.0, 0.0
    ga = np.exp(-1.0 / s)
    gb = np.exp(-1.0 / (1.0 - s))
    tot = ga + gb
    val = ga / tot
    dga = ga / (s * s)
    dgb = gb / ((1.0 - s) * (1.0 - s))
    der = (dga * gb + ga * dgb) / (tot * tot)
    return val, der


@njit(cache=True, inline="always")
def _grad_potential_scalar(s, pot_code, p0, p1, p2):
    if pot_code == POT_NONE:
        return 0.0
    if pot_code == POT_LOG_BUMP:
        r = abs(s)
        if r >= _BUMP_HI:
            return 0.0
        if r <= _BUMP_LO:
            # plateau of the cutoff: eta = 1, eta' = 0
            wprime = r / (1.0 + r * r)
        else:
            width = _BUMP_HI - _BUMP_LO
            eta, deta_ds = _smoothstep_pair((_BUMP_HI - r) / width)
            deta = -deta_ds / width
            val = 0.5 * np.log1p(r * r) - _LOG_SHIFT
            wprime = deta * val + eta * r / (1.0 + r * r)
        if s > 0.0:
            return wprime
        if s < 0.0:
            return -wprime
        return 0.0
    lam3 = p0
    c3 = p1
    base = c3 * s * s
    if pot_code == POT_CUCKER_DONG:
        base += 1.0
    else:
        base += p2
    if lam3 == 1.0:
        return np.sqrt(c3) * s / base
    return np.sqrt(c3) * s * base ** (-(1.0 + lam3) / 2.0)


@njit(cache=True)
def convolve_direct(krow, g, dx):
    M = krow.shape[0]
    out = np.zeros(M)
    for i in range(M):
        acc = 0.0
        for j in range(M):
            acc += krow[(i - j) % M] * g[j]
        out[i] = dx * acc
    return out


@njit(cache=True)
def pairwise_alignment(x, v, th, w, lam1, c1, eps1sq, lam2, c2, eps2sq,
                       pot_code, p0, p1, p2):
    n = x.shape[0]
    sphi = np.zeros(n)
    pphi = np.zeros(n)
    szeta = np.zeros(n)
    qzeta = np.zeros(n)
    hagg = np.zeros(n)
    same_kernel = lam1 == lam2 and c1 == c2 and eps1sq == eps2sq
    wvot = np.empty(n)
    wiot = np.empty(n)
    for j in range(n):
        wvot[j] = w[j] * v[j] / th[j]
        wiot[j] = w[j] / th[j]
    for i in range(n):
        xi = x[i]
        a_sphi = 0.0
        a_pphi = 0.0
        a_szeta = 0.0
        a_qzeta = 0.0
        a_hagg = 0.0
        for j in range(n):
            s = _disp(xi, x[j])
            d = abs(s)
            phi = _influence_scalar(d, lam1, c1, eps1sq)
            zeta = phi if same_kernel else _influence_scalar(d, lam2, c2, eps2sq)
            a_sphi += w[j] * phi
            a_pphi += phi * wvot[j]
            a_szeta += w[j] * zeta
            a_qzeta += zeta * wiot[j]
            a_hagg -= w[j] * _grad_potential_scalar(s, pot_code, p0, p1, p2)
        sphi[i] = a_sphi
        pphi[i] = a_pphi
        szeta[i] = a_szeta
        qzeta[i] = a_qzeta
        hagg[i] = a_hagg
    return sphi, pphi, szeta, qzeta, hagg


@njit(cache=True)
def cross_alignment(x, v, th, xo, vo, tho, lam, c_lam, epssq):
    n = x.shape[0]
    m = xo.shape[0]
    fv = np.zeros(n)
    fth = np.zeros(n)
    for i in range(n):
        acc_v = 0.0
        acc_th = 0.0
        vi = v[i] / th[i]
        inv_thi = 1.0 / th[i]
        for l in range(m):
            d = abs(_disp(x[i], xo[l]))
            phi = _influence_scalar(d, lam, c_lam, epssq)
            acc_v += phi * (vo[l] / tho[l] - vi)
            acc_th += phi * (inv_thi - 1.0 / tho[l])
        fv[i] = acc_v
        fth[i] = acc_th
    return fv, fth


@njit(cache=True)
def max_pairwise_dist(x):
    n = x.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(_disp(x[i], x[j]))
            if d > best:
                best = d
    return best


@njit(cache=True)
def deposit_periodic(x, vals, M, h):
    n = x.shape[0]
    ncomp = vals.shape[0]
    dx = 1.0 / M
    out = np.zeros((ncomp, M))
    k = np.empty(M)
    for p in range(n):
        tot = 0.0
        for i in range(M):
            s = _disp(i * dx, x[p])
            acc = 0.0
            for shift in (-1.0, 0.0, 1.0):
                z = (s + shift) / h
                acc += np.exp(-0.5 * z * z)
            k[i] = acc
            tot += acc
        norm = 1.0 / (dx * tot)
        for c in range(ncomp):
            vc = vals[c, p] * norm
            for i in range(M):
                out[c, i] += vc * k[i]
    return out


@njit(cache=True)
def fluid_sources(rho, u_over_e, inv_e, phirow, zetarow, dx):
    # antisymmetric pair accumulation: each unordered pair is evaluated once
    # and added with opposite signs, so the totals cancel term by term
    # (requires even kernel rows, which influence rows are)
    M = rho.shape[0]
    sm = np.zeros(M)
    se = np.zeros(M)
    for i in range(M):
        ri = rho[i]
        ui = u_over_e[i]
        ei = inv_e[i]
        for j in range(i + 1, M):
            k = j - i
            rr = ri * rho[j]
            tm = phirow[k] * (u_over_e[j] - ui) * rr
            sm[i] += tm
            sm[j] -= tm
            te = zetarow[k] * (ei - inv_e[j]) * rr
            se[i] += te
            se[j] -= te
    for i in range(M):
        sm[i] *= dx
        se[i] *= dx
    return sm, se


@njit(cache=True)
def alignment_matrix(phirow, rho):
    # Neumaier-compensated row sums keep the zero-row-sum identity at the
    # rounding level of the stored diagonal entry
    M = rho.shape[0]
    Phi = np.empty((M, M))
    for i in range(M):
        s = 0.0
        comp = 0.0
        for j in range(M):
            val = phirow[(i - j) % M] * rho[j]
            Phi[i, j] = val
            t = s + val
            if abs(s) >= abs(val):
                comp += (s - t) + val
            else:
                comp += (val - t) + s
            s = t
        Phi[i, i] -= s + comp
    return Phi


@njit(cache=True, inline="always")
def _minmod_scalar(a, b):
    if a > 0.0 and b > 0.0:
        return a if a < b else b
    if a < 0.0 and b < 0.0:
        return a if a > b else b
    return 0.0


@njit(cache=True)
def nt_predict(w, f, g, dt, dx):
    ncomp, M = w.shape
    out = np.empty_like(w)
    for c in range(ncomp):
        for j in range(M):
            fs = _minmod_scalar(f[c, (j + 1) % M] - f[c, j],
                                f[c, j] - f[c, (j - 1) % M])
            out[c, j] = w[c, j] + 0.5 * dt * (g[c, j] - fs / dx)
    return out


@njit(cache=True)
def nt_correct(w, fhalf, ghalf, dt, dx):
    ncomp, M = w.shape
    slope = np.empty_like(w)
    for c in range(ncomp):
        for j in range(M):
            slope[c, j] = _minmod_scalar(w[c, (j + 1) % M] - w[c, j],
                                         w[c, j] - w[c, (j - 1) % M])
    out = np.empty_like(w)
    lam = dt / dx
    for c in range(ncomp):
        for j in range(M):
            jp = (j + 1) % M
            out[c, j] = (0.5 * (w[c, j] + w[c, jp])
                         + 0.125 * (slope[c, j] - slope[c, jp])
                         + lam * (fhalf[c, j] - fhalf[c, jp])
                         + 0.5 * dt * (ghalf[c, j] + ghalf[c, jp]))
    return out


@njit(cache=True)
def weno5_left(f):
    M = f.shape[0]
    out = np.empty(M)
    eps = 1e-6
    for i in range(M):
        fm2 = f[(i - 2) % M]
        fm1 = f[(i - 1) % M]
        f0 = f[i]
        fp1 = f[(i + 1) % M]
        fp2 = f[(i + 2) % M]
        b0 = 13.0 / 12.0 * (fm2 - 2 * fm1 + f0) ** 2 + 0.25 * (fm2 - 4 * fm1 + 3 * f0) ** 2
        b1 = 13.0 / 12.0 * (fm1 - 2 * f0 + fp1) ** 2 + 0.25 * (fm1 - fp1) ** 2
        b2 = 13.0 / 12.0 * (f0 - 2 * fp1 + fp2) ** 2 + 0.25 * (3 * f0 - 4 * fp1 + fp2) ** 2
        a0 = 0.1 / (eps + b0) ** 2
        a1 = 0.6 / (eps + b1) ** 2
        a2 = 0.3 / (eps + b2) ** 2
        s0 = (2 * fm2 - 7 * fm1 + 11 * f0) / 6.0
        s1 = (-fm1 + 5 * f0 + 2 * fp1) / 6.0
        s2 = (2 * f0 + 5 * fp1 - fp2) / 6.0
        out[i] = (a0 * s0 + a1 * s1 + a2 * s2) / (a0 + a1 + a2)
    return out


@njit(cache=True)
def weno5_right(f):
    M = f.shape[0]
    out = np.empty(M)
    eps = 1e-6
    for i in range(M):
        fm1 = f[(i - 1) % M]
        f0 = f[i]
        fp1 = f[(i + 1) % M]
        fp2 = f[(i + 2) % M]
        fp3 = f[(i + 3) % M]
        b0 = 13.0 / 12.0 * (fp3 - 2 * fp2 + fp1) ** 2 + 0.25 * (fp3 - 4 * fp2 + 3 * fp1) ** 2
        b1 = 13.0 / 12.0 * (fp2 - 2 * fp1 + f0) ** 2 + 0.25 * (fp2 - f0) ** 2
        b2 = 13.0 / 12.0 * (fp1 - 2 * f0 + fm1) ** 2 + 0.25 * (3 * fp1 - 4 * f0 + fm1) ** 2
        a0 = 0.1 / (eps + b0) ** 2
        a1 = 0.6 / (eps + b1) ** 2
        a2 = 0.3 / (eps + b2) ** 2
        s0 = (2 * fp3 - 7 * fp2 + 11 * fp1) / 6.0
        s1 = (-fp2 + 5 * fp1 + 2 * f0) / 6.0
        s2 = (2 * fp1 + 5 * f0 - fm1) / 6.0
        out[i] = (a0 * s0 + a1 * s1 + a2 * s2) / (a0 + a1 + a2)
    return out


@njit(cache=True)
def weno5_flux_divergence(rho, u, dx):
    M = rho.shape[0]
    alpha = 0.0
    for i in range(M):
        a = abs(u[i])
        if a > alpha:
            alpha = a
    fplus = np.empty(M)
    fminus = np.empty(M)
    for i in range(M):
        fi = rho[i] * u[i]
        fplus[i] = 0.5 * (fi + alpha * rho[i])
        fminus[i] = 0.5 * (fi - alpha * rho[i])
    fhat = weno5_left(fplus) + weno5_right(fminus)
    out = np.empty(M)
    for i in range(M):
        out[i] = (fhat[i] - fhat[(i - 1) % M]) / dx
    return out
