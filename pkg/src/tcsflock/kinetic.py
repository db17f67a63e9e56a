"""Scaled kinetic solver by the method of characteristics.

A weighted particle cloud carries (x, v, theta, w); velocities and internal
variables feel 1/eps alignment and relaxation forces against both the cloud
itself and the published background mean values. The stiff parts are advanced
by frozen-coefficient exponential maps (the full v and theta right-hand sides
are linear in v resp. in the theta-deviation once the pairwise coefficients
are frozen), with midpoint refresh of the coefficients; this damps the 1/eps
relaxation unconditionally, so eps-sweeps stay affordable.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import backends
from .errors import ConfigError, DomainError
from .torus import (
    AggregationPotential,
    Grid1D,
    InfluenceFn,
    torus_dist,
    wrap,
)


@dataclass(frozen=True)
class ScalingRegime:
    """Which scaled kinetic equation is being solved.

    relaxation "strong" puts the background relaxation of theta at 1/eps,
    "weak" at order one. kernels "singular" replaces the influence functions
    by their eps-scaled singular versions (requires lam1 in (0,1]); a scaled
    aggregation potential additionally requires lam3 = lam1/2.
    """

    relaxation: str = "strong"
    kernels: str = "regular"
    eps: float = 0.1
    lam1: float = 1.0
    lam2: float = 1.0
    lam3: float | None = None

    def __post_init__(self):
        if self.relaxation not in ("strong", "weak"):
            raise ConfigError(f"unknown relaxation regime {self.relaxation!r}")
        if self.kernels not in ("regular", "singular"):
            raise ConfigError(f"unknown kernel regime {self.kernels!r}")
        if self.eps <= 0:
            raise ConfigError("epsilon must be positive")
        if self.kernels == "singular" and not (0 < self.lam1 <= 1):
            raise ConfigError("singular kernels require lam1 in (0, 1]")
        if self.lam3 is not None and self.kernels == "singular" \
                and abs(self.lam3 - self.lam1 / 2) > 1e-12:
            raise ConfigError("scaled potentials require lam3 = lam1/2")

    @property
    def phi(self):
        if self.kernels == "singular":
            return InfluenceFn(lam=self.lam1, kind="singular", eps=self.eps)
        return InfluenceFn(lam=self.lam1)

    @property
    def zeta(self):
        if self.kernels == "singular":
            return InfluenceFn(lam=self.lam2, kind="singular", eps=self.eps)
        return InfluenceFn(lam=self.lam2)

    @property
    def relax_coef(self):
        """Factor multiplying the background relaxation of theta."""
        return 1.0 / self.eps if self.relaxation == "strong" else 1.0


@dataclass
class KineticCloud:
    """Weighted particle ensemble; weights are constant in time and sum to 1."""

    x: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    regime: ScalingRegime
    potential: AggregationPotential | None = None
    background: object = None
    t: float = 0.0

    def __post_init__(self):
        if abs(self.w.sum() - 1.0) > 1e-12:
            raise ConfigError("cloud weights must sum to 1")
        if np.any(self.theta <= 0):
            raise DomainError("internal variables must be positive")

    @property
    def n(self):
        return self.x.shape[0]

    def copy(self):
        return KineticCloud(self.x.copy(), self.v.copy(), self.theta.copy(),
                            self.w, self.regime, self.potential,
                            self.background, self.t)


def _kernel_params(regime):
    phi, zeta = regime.phi, regime.zeta
    return (phi.lam, phi.c_lam, phi.eps2, zeta.lam, zeta.c_lam, zeta.eps2)


def _potential_params(cloud):
    pot = cloud.potential
    if pot is None:
        return 0, 0.0, 0.0, 0.0
    p0, p1, p2 = pot.params
    return pot.code, p0, p1, p2


def _pairwise(cloud):
    lam1, c1, e1, lam2, c2, e2 = _kernel_params(cloud.regime)
    code, p0, p1, p2 = _potential_params(cloud)
    return backends.pairwise_alignment(cloud.x, cloud.v, cloud.theta, cloud.w,
                                       lam1, c1, e1, lam2, c2, e2,
                                       code, p0, p1, p2)


def _background_values(cloud, t):
    bg = cloud.background
    if bg is None:
        return None, None
    return bg.u_ratio(t), bg.theta_inf(t)


def kinetic_forces(cloud, t=None):
    """Per-particle (dv, dtheta) of the characteristic system.

    dv = (1/eps)(F + H + F_c) with F, H the weighted pairwise alignment and
    aggregation sums and F_c = u_inf/theta_inf - v/theta; dtheta carries
    (1/eps) G plus the regime-dependent factor on G_c = 1/theta - 1/theta_inf.
    Without a background the cross terms are absent.
    """
    if np.any(cloud.theta <= 0):
        raise DomainError("internal variables must stay positive")
    t = cloud.t if t is None else t
    eps = cloud.regime.eps
    sphi, pphi, szeta, qzeta, hagg = _pairwise(cloud)
    F = pphi - sphi * cloud.v / cloud.theta
    G = szeta / cloud.theta - qzeta
    u_ratio, theta_inf = _background_values(cloud, t)
    if u_ratio is None:
        dv = (F + hagg) / eps
        dth = G / eps
    else:
        Fc = u_ratio - cloud.v / cloud.theta
        Gc = 1.0 / cloud.theta - 1.0 / theta_inf
        dv = (F + hagg + Fc) / eps
        dth = G / eps + cloud.regime.relax_coef * Gc
    return dv, dth


def _exp_coefficients(cloud, t):
    """Frozen-coefficient linear form of the forces.

    dv_i     = -a_i v_i + b_i
    dtheta_i = -alpha_i (theta_i - tau_i)

    a, b come from splitting the alignment operator into its damping part
    (linear in v_i) and drive; alpha, tau from rewriting the theta alignment
    and relaxation through 1/th_i - 1/th_j = (th_j - th_i)/(th_i th_j), which
    makes tau_i a weighted harmonic-type mean of {theta_j} and theta_inf, so
    the exponential map is a convex combination and cannot leave the support
    interval.
    """
    eps = cloud.regime.eps
    sphi, pphi, szeta, qzeta, hagg = _pairwise(cloud)
    u_ratio, theta_inf = _background_values(cloud, t)
    cross = 0.0 if u_ratio is None else 1.0
    a = (sphi + cross) / (eps * cloud.theta)
    b = (pphi + hagg + (u_ratio if u_ratio is not None else 0.0)) / eps
    c_relax = cloud.regime.relax_coef if theta_inf is not None else 0.0
    alpha = qzeta / (eps * cloud.theta)
    beta = szeta / (eps * cloud.theta)
    if theta_inf is not None:
        alpha = alpha + c_relax / (cloud.theta * theta_inf)
        beta = beta + c_relax / cloud.theta
    tau = np.where(alpha > 0, beta / np.where(alpha > 0, alpha, 1.0), cloud.theta)
    return a, b, alpha, tau


def _apply_exp(cloud, coefs, h):
    """Advance (v, theta) by the frozen-coefficient exponential maps."""
    a, b, alpha, tau = coefs
    decay_v = np.exp(-a * h)
    v_star = np.where(a > 0, b / np.where(a > 0, a, 1.0), 0.0)
    v = np.where(a > 0, v_star + (cloud.v - v_star) * decay_v, cloud.v + h * b)
    theta = tau + (cloud.theta - tau) * np.exp(-alpha * h)
    return v, theta


def substep(cloud, h):
    """Exponential-midpoint substep: freeze coefficients, advance half a step,
    refresh the coefficients there, then advance the full step; positions use
    the midpoint velocity."""
    t = cloud.t
    coefs = _exp_coefficients(cloud, t)
    vm, thm = _apply_exp(cloud, coefs, 0.5 * h)
    mid = replace(cloud, v=vm, theta=thm, x=wrap(cloud.x + 0.5 * h * cloud.v),
                  t=t + 0.5 * h)
    coefs_mid = _exp_coefficients(mid, t + 0.5 * h)
    v, theta = _apply_exp(cloud, coefs_mid, h)
    x = wrap(cloud.x + h * mid.v)
    return replace(cloud, x=x, v=v, theta=theta, t=t + h)


@dataclass
class CloudHistory:
    times: list = field(default_factory=list)
    d_theta: list = field(default_factory=list)
    d_v: list = field(default_factory=list)
    r_v: list = field(default_factory=list)
    theta_min: list = field(default_factory=list)
    theta_max: list = field(default_factory=list)
    mean_theta: list = field(default_factory=list)
    mean_v2: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    def record(self, cloud):
        self.times.append(cloud.t)
        self.d_theta.append(float(cloud.theta.max() - cloud.theta.min()))
        self.d_v.append(float(cloud.v.max() - cloud.v.min()))
        self.r_v.append(float(np.abs(cloud.v).max()))
        self.theta_min.append(float(cloud.theta.min()))
        self.theta_max.append(float(cloud.theta.max()))
        self.mean_theta.append(float(np.sum(cloud.w * cloud.theta)))
        self.mean_v2.append(float(np.sum(cloud.w * cloud.v**2)))


def advance(cloud, dt, T, snapshot_times=(), record_every=1):
    """March the cloud to time T with substeps h = min(dt, eps/4).

    Light support diagnostics are recorded every record_every substeps; full
    cloud snapshots are stored at the requested times. Weights are never
    written. Returns (cloud, history).
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if cloud.background is not None:
        cloud.background.advance_to(cloud.t)
    h = min(dt, cloud.regime.eps / 4.0)
    history = CloudHistory()
    history.record(cloud)
    snap_left = sorted(snapshot_times)
    while snap_left and snap_left[0] <= cloud.t + 1e-12:
        history.snapshots[snap_left.pop(0)] = cloud.copy()
    k = 0
    while cloud.t < T - 1e-12:
        step = min(h, T - cloud.t)
        if snap_left:
            step = min(step, snap_left[0] - cloud.t)
        if cloud.background is not None:
            cloud.background.advance_to(cloud.t + step)
        cloud = substep(cloud, step)
        k += 1
        if k % record_every == 0:
            history.record(cloud)
        while snap_left and cloud.t >= snap_left[0] - 1e-12:
            history.snapshots[snap_left.pop(0)] = cloud.copy()
    if history.times[-1] != cloud.t:
        history.record(cloud)
    return cloud, history


def support_diameters(cloud):
    """(D_x, D_v, D_theta, R_x, R_v): support diameters and radii.

    D_x is the largest pairwise geodesic distance; R_x, R_v the largest
    distances to the origin of the respective variables.
    """
    if cloud.n == 0:
        raise ConfigError("empty cloud")
    d_x = float(backends.max_pairwise_dist(cloud.x))
    d_v = float(cloud.v.max() - cloud.v.min())
    d_th = float(cloud.theta.max() - cloud.theta.min())
    r_x = float(np.max(torus_dist(cloud.x, 0.0)))
    r_v = float(np.abs(cloud.v).max())
    return d_x, d_v, d_th, r_x, r_v


@dataclass(frozen=True)
class MomentSet:
    """Grid moments of the cloud: deposits of w, wv, w theta, w v/theta,
    w/theta, w v^2, w v theta."""

    grid: Grid1D
    rho: np.ndarray
    j: np.ndarray
    h: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S_v: np.ndarray
    S_theta: np.ndarray


def moments_on_grid(cloud, M, bandwidth):
    """Deposit the moment hierarchy onto an M-node grid with a periodic
    Gaussian of width bandwidth (discretely normalized, so the grid integral
    of rho is exactly 1)."""
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    w, v, th = cloud.w, cloud.v, cloud.theta
    vals = np.stack([w, w * v, w * th, w * v / th, w / th, w * v * v, w * v * th])
    fields = backends.deposit_periodic(cloud.x, vals, M, bandwidth)
    return MomentSet(Grid1D(M), *fields)


def compatibility_gap(theta0_min, theta0_max, bg_theta_min, bg_theta_max):
    """Positive when the initial theta-diameter satisfies the smallness
    condition against min/max of the two species' envelopes."""
    theta_m = min(theta0_min, bg_theta_min)
    theta_M = max(theta0_max, bg_theta_max)
    return theta_m**2 / theta_M - (theta0_max - theta0_min)


def check_compatibility(theta0_min, theta0_max, bg_theta_min, bg_theta_max,
                        regime=None):
    """Warn when the support-coercivity condition fails; for singular kernels
    additionally enforce the strong initial-concentration requirement
    D_theta(0)/eps < theta_m^2/theta_M as a hard error."""
    gap = compatibility_gap(theta0_min, theta0_max, bg_theta_min, bg_theta_max)
    if gap <= 0:
        warnings.warn(
            "initial theta-diameter violates the support compatibility "
            f"condition by {-gap:.3g}; coercivity bounds may not apply",
            stacklevel=2)
    if regime is not None and regime.kernels == "singular":
        theta_m = min(theta0_min, bg_theta_min)
        theta_M = max(theta0_max, bg_theta_max)
        if (theta0_max - theta0_min) / regime.eps >= theta_m**2 / theta_M:
            raise ConfigError(
                "singular kernels need strong initial concentration: "
                "D_theta(0)/eps must stay below theta_m^2/theta_M")
    return gap


def _van_der_corput(n, base):
    seq = np.zeros(n)
    for i in range(n):
        f, k, x = 1.0, i + 1, 0.0
        while k > 0:
            f /= base
            x += f * (k % base)
            k //= base
        seq[i] = x
    return seq


def sample_cloud(n, rho0_fn, u0_fn, regime, potential=None, background=None,
                 theta_range=(1.9, 2.1), sigma_v=0.05, seed=0, grid_m=4096):
    """Deterministic tensor sampling of the initial cloud.

    Positions follow rho0 by inverse-CDF over a low-discrepancy stream,
    velocities are Gaussian about the profile u0(x), internal variables are
    midpoint-stratified on theta_range (exact sample mean) and shuffled so
    they decorrelate from x. Everything is reproducible from the seed.
    """
    rng = np.random.default_rng(seed)
    grid = Grid1D(grid_m)
    pdf = np.maximum(np.asarray(rho0_fn(grid.nodes), dtype=float), 0.0)
    cdf = np.cumsum(pdf)
    cdf = cdf / cdf[-1]
    offset = rng.random()
    u_stream = wrap(_van_der_corput(n, 2) + offset)
    x = np.interp(u_stream, np.concatenate([[0.0], cdf]),
                  np.concatenate([[0.0], grid.nodes + grid.dx]))
    x = wrap(x)
    v = np.asarray(u0_fn(x), dtype=float) + sigma_v * rng.standard_normal(n)
    lo, hi = theta_range
    if lo <= 0 or hi < lo:
        raise ConfigError("theta_range must be positive with lo <= hi")
    theta = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    rng.shuffle(theta)
    w = np.full(n, 1.0 / n)
    return KineticCloud(x, v, theta, w, regime, potential, background)
