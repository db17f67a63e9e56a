"""Cross-level verification: transport metrics on the circle, exponential
decay-rate fits, the order parameter, and the epsilon-sweep harness that
compares kinetic moments against the limiting macroscopic solution.

Narrow convergence itself is not computable; the declared surrogates are the
periodic 1-Wasserstein distance on densities and a random-feature bounded-
Lipschitz norm on (signed) momentum fields.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FitError
from . import kinetic, macro
from .torus import Grid1D


def wasserstein1_periodic(rho_a, rho_b, dx=None):
    """W1 between two grid densities on the circle.

    Uses the circular-CDF formula min_c dx sum |F_a - F_b - c|; the optimal
    vertical shift c is a median of the CDF differences, and the objective is
    piecewise linear with kinks only at those values.
    """
    rho_a = np.asarray(rho_a, dtype=float)
    rho_b = np.asarray(rho_b, dtype=float)
    if rho_a.shape != rho_b.shape:
        raise ConfigError("densities must share the grid")
    if dx is None:
        dx = 1.0 / rho_a.shape[0]
    ma, mb = dx * rho_a.sum(), dx * rho_b.sum()
    if abs(ma - 1.0) > 1e-8 or abs(mb - 1.0) > 1e-8:
        raise ConfigError(f"densities must have unit mass (got {ma:.6g}, {mb:.6g})")
    diff = dx * np.cumsum(rho_a - rho_b)
    c = np.median(diff)
    return dx * float(np.abs(diff - c).sum())


def bl_features(M, n_features=64, seed=12345):
    """Fixed random Fourier features normalized to unit bounded-Lipschitz
    size (sup norm plus Lipschitz constant at most 1)."""
    rng = np.random.default_rng(seed)
    x = np.arange(M) / M
    feats = np.empty((n_features, M))
    for k in range(n_features):
        m = rng.integers(1, 9)
        a, b = rng.standard_normal(2)
        g = a * np.cos(2 * np.pi * m * x) + b * np.sin(2 * np.pi * m * x)
        amp = np.hypot(a, b)
        norm = amp + 2 * np.pi * m * amp  # sup + Lipschitz bound
        feats[k] = g / norm
    return feats


def bounded_lipschitz(j_a, j_b, dx=None, feats=None):
    """Dual bounded-Lipschitz surrogate distance between two signed grid
    fields: max over the fixed feature set of |integral g d(j_a - j_b)|."""
    j_a = np.asarray(j_a, dtype=float)
    j_b = np.asarray(j_b, dtype=float)
    if j_a.shape != j_b.shape:
        raise ConfigError("fields must share the grid")
    M = j_a.shape[0]
    if dx is None:
        dx = 1.0 / M
    if feats is None:
        feats = bl_features(M)
    vals = dx * feats @ (j_a - j_b)
    return float(np.abs(vals).max())


@dataclass(frozen=True)
class RateFit:
    """Exponential fit series ~ amplitude * exp(-rate * t) over a window,
    by log-linear least squares; the residual is the rms misfit of log y."""

    rate: float
    amplitude: float
    residual: float
    window: tuple


def fit_decay(times, values, window=None):
    """Fit an exponential decay rate on the (sub)window of a positive series."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, y = t[keep], y[keep]
    if t.size < 2:
        raise FitError("need at least two samples in the fit window")
    if np.any(y <= 0):
        raise FitError("series must be positive on the fit window")
    ly = np.log(y)
    if np.ptp(ly) == 0.0:
        raise FitError("series is constant on the fit window; no decay to fit")
    A = np.vstack([np.ones_like(t), -t]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    win = (float(t[0]), float(t[-1])) if window is None else tuple(window)
    return RateFit(rate=float(coef[1]), amplitude=float(np.exp(coef[0])),
                   residual=resid, window=win)


def decay_window(eps, theta_max, t_end):
    """Fit window [2 sqrt(eps), min(1, 20 eps theta_max^2)] clipped to the
    run horizon; skips the initial layer and stops before floor saturation."""
    lo = 2.0 * np.sqrt(eps)
    hi = min(1.0, 20.0 * eps * theta_max**2, t_end)
    if hi <= lo:
        hi = min(t_end, max(1.0, lo * 2))
    return lo, hi


def order_parameter(rho, dx=None):
    """Norm of the first circular moment; 0 for uniform, 1 for a point mass."""
    rho = np.asarray(rho, dtype=float)
    if dx is None:
        dx = 1.0 / rho.shape[0]
    if abs(dx * rho.sum() - 1.0) > 1e-8:
        raise ConfigError("order parameter expects unit mass")
    return macro.order_parameter(rho, dx)


@dataclass
class LimitComparison:
    """Distances between kinetic moments and the macroscopic limit run, per
    epsilon and snapshot time."""

    epsilons: list
    snapshots: list
    rho_dist: dict = field(default_factory=dict)   # eps -> [d(t) per snapshot]
    j_dist: dict = field(default_factory=dict)
    theta_inf_rate_fd: float = 0.0
    theta_inf_rate_bound: float = 0.0

    def monotone(self, which="rho"):
        """True when the distance strictly decreases along decreasing eps at
        every snapshot (vacuously true for a single epsilon)."""
        table = self.rho_dist if which == "rho" else self.j_dist
        eps_sorted = sorted(self.epsilons, reverse=True)
        for k in range(len(self.snapshots)):
            seq = [table[e][k] for e in eps_sorted]
            if any(b >= a for a, b in zip(seq, seq[1:])):
                return False
        return True

    def report(self):
        return {
            "epsilons": list(self.epsilons),
            "snapshots": list(self.snapshots),
            "rho_distances": {str(e): list(map(float, v)) for e, v in self.rho_dist.items()},
            "j_distances": {str(e): list(map(float, v)) for e, v in self.j_dist.items()},
            "monotone_rho": self.monotone("rho"),
            "monotone_j": self.monotone("j"),
            "theta_inf_rate_fd": self.theta_inf_rate_fd,
            "theta_inf_rate_bound": self.theta_inf_rate_bound,
        }


def epsilon_sweep(epsilons, cloud_factory, background_factory, macro_args,
                  snapshots=(0.5, 1.0, 2.0), M=128, bandwidth=None,
                  record_every=1):
    """Run the kinetic solver for each epsilon against the shared macroscopic
    reference and collect the snapshot distances.

    cloud_factory(eps, background) must return a fresh cloud built from the
    same initial data for every eps (common random numbers); macro_args is
    the dict of run_macro keyword arguments (minus background/T).
    Returns (LimitComparison, histories dict).
    """
    snapshots = sorted(snapshots)
    T = snapshots[-1]
    if bandwidth is None:
        bandwidth = 2.0 / M

    bg_macro = background_factory()
    grid = Grid1D(M)
    _, _, macro_hist = macro.run_macro(
        background=bg_macro, T=T, grid=grid, snapshot_times=snapshots,
        **macro_args)

    comp = LimitComparison(epsilons=list(epsilons), snapshots=list(snapshots))
    feats = bl_features(M)
    histories = {}
    for eps in epsilons:
        bg = background_factory()
        cloud = cloud_factory(eps, bg)
        cloud, hist = kinetic.advance(cloud, dt=np.inf, T=T,
                                      snapshot_times=snapshots,
                                      record_every=record_every)
        histories[eps] = hist
        drho, dj = [], []
        for ts in snapshots:
            snap = hist.snapshots[ts]
            mom = kinetic.moments_on_grid(snap, M, bandwidth)
            rho_ref, u_ref = macro_hist.snapshots[ts]
            drho.append(wasserstein1_periodic(mom.rho, rho_ref))
            dj.append(bounded_lipschitz(mom.j, rho_ref * u_ref, feats=feats))
        comp.rho_dist[eps] = drho
        comp.j_dist[eps] = dj
        if hasattr(bg, "theta_inf_rate_fd"):
            comp.theta_inf_rate_fd = max(comp.theta_inf_rate_fd, bg.theta_inf_rate_fd())
            comp.theta_inf_rate_bound = bg.theta_inf_rate_bound()
    return comp, histories
