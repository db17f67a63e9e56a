"""Pure-numpy implementations of the hot numeric kernels.

Every function here has a twin in ``_kernels_numba`` with the same name and
signature; the active set is chosen in :mod:`tcsflock.backends`. These
vectorized versions define the reference semantics, the numba twins are loop
transcriptions of the same arithmetic.

Conventions shared by both backends:

* influence functions are encoded by ``(lam, c_lam, eps2)`` where
  ``eps2 = 0`` selects the regular profile ``(1 + c d^2)^(-lam/2)`` and
  ``eps2 > 0`` the singular profile ``(eps^2 + c d^2)^(-lam/2)``;
* aggregation-potential gradients are encoded by ``(pot_code, p0, p1, p2)``,
  see :mod:`tcsflock.torus` for the catalogue.
"""

import numpy as np

POT_NONE = 0
POT_LOG_BUMP = 1
POT_CUCKER_DONG = 2
POT_CUCKER_DONG_SCALED = 3

_BUMP_LO = 1.0 / 6.0
_BUMP_HI = 1.0 / 3.0
_LOG_SHIFT = 0.5 * np.log(1.25)


def torus_dist(a, b):
    """Geodesic distance on the unit torus, elementwise."""
    r = np.mod(a - b, 1.0)
    return np.where(r > 0.5, 1.0 - r, r)


def torus_disp(a, b):
    """Signed displacement a - b mapped to (-1/2, 1/2]."""
    r = np.mod(a - b, 1.0)
    return np.where(r > 0.5, r - 1.0, r)


def influence(d, lam, c_lam, eps2):
    """Influence profile at distance d (regular when eps2 == 0)."""
    d = np.asarray(d, dtype=np.float64)
    base = (1.0 if eps2 == 0.0 else eps2) + c_lam * d * d
    if lam == 1.0:
        return 1.0 / np.sqrt(base)
    if lam == 2.0:
        return 1.0 / base
    return base ** (-lam / 2.0)


def _smoothstep(s):
    # C-infinity step: 0 for s <= 0, 1 for s >= 1
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inner = (s > 0.0) & (s < 1.0)
    si = s[inner]
    ga = np.exp(-1.0 / si)
    gb = np.exp(-1.0 / (1.0 - si))
    out[inner] = ga / (ga + gb)
    out[s >= 1.0] = 1.0
    return out


def _smoothstep_deriv(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inner = (s > 0.0) & (s < 1.0)
    si = s[inner]
    ga = np.exp(-1.0 / si)
    gb = np.exp(-1.0 / (1.0 - si))
    dga = ga / (si * si)
    dgb = gb / ((1.0 - si) * (1.0 - si))
    out[inner] = (dga * gb + ga * dgb) / (ga + gb) ** 2
    return out


def bump(r):
    """Radial cutoff: 1 on [0, 1/6], 0 on [1/3, inf), smooth between."""
    return _smoothstep((_BUMP_HI - np.asarray(r, dtype=np.float64)) / (_BUMP_HI - _BUMP_LO))


def bump_deriv(r):
    return -_smoothstep_deriv(
        (_BUMP_HI - np.asarray(r, dtype=np.float64)) / (_BUMP_HI - _BUMP_LO)
    ) / (_BUMP_HI - _BUMP_LO)


def grad_potential(s, pot_code, p0, p1, p2):
    """Gradient of the aggregation potential at signed displacement s.

    POT_LOG_BUMP: d/dx of eta(|x|)(log(1+x^2)/2 - log(5/4)/2); params unused.
    POT_CUCKER_DONG: sqrt(c3) x (1 + c3 x^2)^(-(1+lam3)/2), (p0, p1) = (lam3, c3).
    POT_CUCKER_DONG_SCALED: same with p2 = eps^2 replacing the 1.
    """
    s = np.asarray(s, dtype=np.float64)
    if pot_code == POT_NONE:
        return np.zeros_like(s)
    if pot_code == POT_LOG_BUMP:
        r = np.abs(s)
        val = 0.5 * np.log1p(r * r) - _LOG_SHIFT
        wprime = bump_deriv(r) * val + bump(r) * r / (1.0 + r * r)
        return np.sign(s) * wprime
    lam3, c3 = p0, p1
    base = (1.0 if pot_code == POT_CUCKER_DONG else p2) + c3 * s * s
    return np.sqrt(c3) * s * base ** (-(1.0 + lam3) / 2.0)


def convolve_direct(krow, g, dx):
    """Cyclic rectangle-rule convolution, (k*g)_i = dx sum_j krow[(i-j) mod M] g_j."""
    M = krow.shape[0]
    if g.shape[0] != M:
        raise ValueError("kernel and field must share the grid size")
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    return dx * (krow[idx] @ g)


def pairwise_alignment(x, v, th, w, lam1, c1, eps1sq, lam2, c2, eps2sq,
                       pot_code, p0, p1, p2):
    """Weighted pairwise sums of the alignment/aggregation operators.

    Returns (sphi, pphi, szeta, qzeta, hagg) with, for particle i,

        sphi_i  = sum_j w_j phi(d_ij)
        pphi_i  = sum_j w_j phi(d_ij) v_j / th_j
        szeta_i = sum_j w_j zeta(d_ij)
        qzeta_i = sum_j w_j zeta(d_ij) / th_j
        hagg_i  = -sum_j w_j gradW(x_i - x_j)
    """
    disp = torus_disp(x[:, None], x[None, :])
    d = np.abs(disp)
    phi = influence(d, lam1, c1, eps1sq)
    zeta = influence(d, lam2, c2, eps2sq)
    sphi = phi @ w
    pphi = phi @ (w * v / th)
    szeta = zeta @ w
    qzeta = zeta @ (w / th)
    gw = grad_potential(disp, pot_code, p0, p1, p2)
    hagg = -(gw @ w)
    return sphi, pphi, szeta, qzeta, hagg


def cross_alignment(x, v, th, xo, vo, tho, lam, c_lam, epssq):
    """Cross-species alignment sums against the other species (xo, vo, tho).

    fv_i  = sum_l phi(d_il)(v_l/th_l - v_i/th_i)
    fth_i = sum_l zeta(d_il)(1/th_i - 1/th_l)   [same kernel passed in]
    """
    d = torus_dist(x[:, None], xo[None, :])
    phi = influence(d, lam, c_lam, epssq)
    ones = np.ones_like(xo)
    fv = phi @ (vo / tho) - (phi @ ones) * (v / th)
    fth = (phi @ ones) / th - phi @ (1.0 / tho)
    return fv, fth


def max_pairwise_dist(x):
    """Largest pairwise torus distance; O(N^2), chunked to bound memory."""
    n = x.shape[0]
    best = 0.0
    step = max(1, int(2**22 // max(n, 1)))
    for s in range(0, n, step):
        d = torus_dist(x[s:s + step, None], x[None, :])
        m = float(d.max()) if d.size else 0.0
        if m > best:
            best = m
    return best


def deposit_periodic(x, vals, M, h):
    """Kernel-density deposit of per-particle values onto the grid.

    Each particle spreads a periodic Gaussian of width h, discretely
    normalized so that dx * sum_i K(x_i - x_p) = 1 per particle exactly.
    vals has shape (ncomp, N); returns (ncomp, M).
    """
    dx = 1.0 / M
    nodes = np.arange(M) * dx
    disp = torus_disp(nodes[:, None], x[None, :])
    k = np.zeros_like(disp)
    for shift in (-1.0, 0.0, 1.0):
        k += np.exp(-0.5 * ((disp + shift) / h) ** 2)
    k /= dx * k.sum(axis=0, keepdims=True)
    return vals @ k.T


def fluid_sources(rho, u_over_e, inv_e, phirow, zetarow, dx):
    """Alignment source terms of the background balance law.

    S_m(i) = dx sum_j phi_ij (u_j/e_j - u_i/e_i) rho_i rho_j
    S_E(i) = dx sum_j zeta_ij (1/e_i - 1/e_j) rho_i rho_j

    The kernel rows must be even (rows of influence functions are).
    """
    M = rho.shape[0]
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    phi = phirow[idx]
    zeta = zetarow[idx]
    sm = dx * rho * (phi @ (u_over_e * rho) - (phi @ rho) * u_over_e)
    se = dx * rho * ((zeta @ rho) * inv_e - zeta @ (inv_e * rho))
    return sm, se


def alignment_matrix(phirow, rho):
    """Nonlocal alignment matrix phi_ij rho_j with the diagonal shifted so
    every row sums to zero; the diagonal is computed with extended precision
    because it cancels an O(M)-sized quantity."""
    M = rho.shape[0]
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    Phi = phirow[idx] * rho[None, :]
    rowsums = np.sum(Phi, axis=1, dtype=np.longdouble)
    diag = np.asarray(np.diagonal(Phi) - rowsums, dtype=np.float64)
    np.fill_diagonal(Phi, diag)
    return Phi


def _minmod(a, b):
    return np.where(np.sign(a) == np.sign(b),
                    np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def nt_predict(w, f, g, dt, dx):
    """Staggered-central predictor: w + dt/2 (g - f'/dx) per component, with
    minmod-limited flux slopes. w, f, g are (ncomp, M) stacks."""
    fslope = _minmod(np.roll(f, -1, axis=1) - f, f - np.roll(f, 1, axis=1))
    return w + 0.5 * dt * (g - fslope / dx)


def nt_correct(w, fhalf, ghalf, dt, dx):
    """Staggered-central corrector producing the values on the complementary
    grid: cell averages plus limited slopes, flux differences at the
    predicted state, and the trapezoid of the predicted sources."""
    wslope = _minmod(np.roll(w, -1, axis=1) - w, w - np.roll(w, 1, axis=1))
    return (0.5 * (w + np.roll(w, -1, axis=1))
            + 0.125 * (wslope - np.roll(wslope, -1, axis=1))
            + (dt / dx) * (fhalf - np.roll(fhalf, -1, axis=1))
            + 0.5 * dt * (ghalf + np.roll(ghalf, -1, axis=1)))


def weno5_left(f):
    """WENO5-JS left-biased value of f at interface i+1/2 (stencil i-2..i+2)."""
    fm2 = np.roll(f, 2)
    fm1 = np.roll(f, 1)
    f0 = f
    fp1 = np.roll(f, -1)
    fp2 = np.roll(f, -2)

    b0 = 13.0 / 12.0 * (fm2 - 2 * fm1 + f0) ** 2 + 0.25 * (fm2 - 4 * fm1 + 3 * f0) ** 2
    b1 = 13.0 / 12.0 * (fm1 - 2 * f0 + fp1) ** 2 + 0.25 * (fm1 - fp1) ** 2
    b2 = 13.0 / 12.0 * (f0 - 2 * fp1 + fp2) ** 2 + 0.25 * (3 * f0 - 4 * fp1 + fp2) ** 2

    eps = 1e-6
    a0 = 0.1 / (eps + b0) ** 2
    a1 = 0.6 / (eps + b1) ** 2
    a2 = 0.3 / (eps + b2) ** 2

    s0 = (2 * fm2 - 7 * fm1 + 11 * f0) / 6.0
    s1 = (-fm1 + 5 * f0 + 2 * fp1) / 6.0
    s2 = (2 * f0 + 5 * fp1 - fp2) / 6.0
    return (a0 * s0 + a1 * s1 + a2 * s2) / (a0 + a1 + a2)


def weno5_right(f):
    """WENO5-JS right-biased value of f at interface i+1/2 (stencil i-1..i+3)."""
    fm1 = np.roll(f, 1)
    f0 = f
    fp1 = np.roll(f, -1)
    fp2 = np.roll(f, -2)
    fp3 = np.roll(f, -3)

    b0 = 13.0 / 12.0 * (fp3 - 2 * fp2 + fp1) ** 2 + 0.25 * (fp3 - 4 * fp2 + 3 * fp1) ** 2
    b1 = 13.0 / 12.0 * (fp2 - 2 * fp1 + f0) ** 2 + 0.25 * (fp2 - f0) ** 2
    b2 = 13.0 / 12.0 * (fp1 - 2 * f0 + fm1) ** 2 + 0.25 * (3 * fp1 - 4 * f0 + fm1) ** 2

    eps = 1e-6
    a0 = 0.1 / (eps + b0) ** 2
    a1 = 0.6 / (eps + b1) ** 2
    a2 = 0.3 / (eps + b2) ** 2

    s0 = (2 * fp3 - 7 * fp2 + 11 * fp1) / 6.0
    s1 = (-fp2 + 5 * fp1 + 2 * f0) / 6.0
    s2 = (2 * fp1 + 5 * f0 - fm1) / 6.0
    return (a0 * s0 + a1 * s1 + a2 * s2) / (a0 + a1 + a2)


def weno5_flux_divergence(rho, u, dx):
    """Flux difference of d/dx(rho u) with global Lax-Friedrichs splitting."""
    alpha = np.max(np.abs(u))
    f = rho * u
    fplus = 0.5 * (f + alpha * rho)
    fminus = 0.5 * (f - alpha * rho)
    fhat = weno5_left(fplus) + weno5_right(fminus)
    return (fhat - np.roll(fhat, 1)) / dx
