"""Limiting macroscopic solver.

Transport of the density by WENO5 with TVD-RK3 time stepping, velocity
recovered each step from the implicit nonlocal linear system, and in the weak
relaxation regime the scalar internal variable driven by its relaxation ODE
against the background mean value.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backends
from .errors import ConfigError, DomainError, InstabilityError, StiffnessError
from .torus import gradient_row, influence_row

CFL_TRANSPORT = 0.4
VELOCITY_RESIDUAL_TOL = 1e-10


def transport_step(rho, u, dt, dx):
    """One TVD-RK3 step of d/dt rho + d/dx (rho u) = 0 with u frozen.

    Conservative flux-split WENO5 in space; the three-stage convex
    Shu-Osher combination in time.
    """
    if dt > CFL_TRANSPORT * dx / max(float(np.max(np.abs(u))), 1e-300) * (1 + 1e-12):
        raise ConfigError("transport dt violates the CFL bound")

    def L(r):
        return -backends.weno5_flux_divergence(r, u, dx)

    r1 = rho + dt * L(rho)
    r2 = 0.75 * rho + 0.25 * (r1 + dt * L(r1))
    out = (rho + 2.0 * (r2 + dt * L(r2))) / 3.0
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite density after transport step")
    return out


def clip_negative(rho, dx, target_mass=1.0):
    """Zero out WENO undershoots and renormalize to the target mass.

    Returns (rho, clipped_mass); the clipped mass is the L1 size of the
    removed negative part and is logged by the driver.
    """
    neg = rho < 0.0
    clipped = -dx * float(rho[neg].sum()) if np.any(neg) else 0.0
    if clipped:
        rho = np.where(neg, 0.0, rho)
    mass = dx * float(rho.sum())
    return rho * (target_mass / mass), clipped


def build_alignment_matrix(phirow, rho, dx=None):
    """Phi with Phi_ij = phi(x_i - x_j) rho_j - delta_ij sum_k phi(x_i-x_k) rho_k.

    Row sums vanish identically (to the rounding of one entry), which makes
    (I - dx Phi) strictly diagonally dominant for rho >= 0 with gap 1.
    """
    del dx  # the matrix itself is dx-free; kept for call-site symmetry
    return backends.alignment_matrix(phirow, rho)


def solve_velocity(rho, phirow, gradw_row, dx, u_inf, theta_inf, theta_eff):
    """Solve the implicit velocity system (I - dx Phi) u = rhs.

    Strong regime: theta_eff == theta_inf and rhs = u_inf 1 - dx W rho.
    Weak regime:   rhs = (theta/theta_inf) u_inf 1 - theta dx W rho.
    The convolution dx W rho is the sampled gradW * rho.
    """
    M = rho.shape[0]
    A = build_alignment_matrix(phirow, rho)
    A *= -dx
    A[np.diag_indices(M)] += 1.0
    wconv = backends.convolve_direct(gradw_row, rho, dx)
    rhs = (theta_eff / theta_inf) * u_inf - theta_eff * wconv
    u = np.linalg.solve(A, rhs)
    # diagonal dominance guarantees solvability; treat failure as a bug
    residual = np.linalg.norm(A @ u - rhs)
    scale = max(np.linalg.norm(rhs), 1e-300)
    if residual > VELOCITY_RESIDUAL_TOL * scale:
        raise InstabilityError(f"velocity solve residual {residual:.3e} exceeds tolerance")
    return u


def relax_theta_step(theta, t, dt, theta_inf_fn):
    """One RK4 step of d theta/dt = 1/theta - 1/theta_inf(t), halving the
    step if positivity is at risk."""

    def rhs(th, tt):
        if th <= 0:
            raise DomainError("internal variable left the positive half-line")
        return 1.0 / th - 1.0 / theta_inf_fn(tt)

    remaining = dt
    while remaining > 0:
        h = remaining
        while True:
            k1 = rhs(theta, t)
            k2 = rhs(theta + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs(theta + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(theta + h * k3, t + h)
            cand = theta + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if cand > 0:
                break
            h *= 0.5
            if h < 1e-12:
                raise StiffnessError("relaxation ODE step collapsed below 1e-12")
        theta = cand
        t += h
        remaining -= h
    return theta


def relax_theta(theta0, theta_inf_fn, dt, T):
    """Integrate the relaxation ODE on [0, T]; returns (times, thetas)."""
    if theta0 <= 0:
        raise DomainError("theta(0) must be positive")
    n = int(round(T / dt))
    times = [0.0]
    thetas = [theta0]
    th, t = theta0, 0.0
    for _ in range(n):
        th = relax_theta_step(th, t, dt, theta_inf_fn)
        t += dt
        times.append(t)
        thetas.append(th)
    return np.asarray(times), np.asarray(thetas)


def order_parameter(rho, dx):
    """Modulus of the first circular moment of the density."""
    x = np.arange(rho.shape[0]) * dx
    c = dx * float(np.sum(np.cos(2 * np.pi * x) * rho))
    s = dx * float(np.sum(np.sin(2 * np.pi * x) * rho))
    return float(np.hypot(c, s))


@dataclass
class MacroHistory:
    times: list = field(default_factory=list)
    order_param: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    theta_inf: list = field(default_factory=list)
    max_u: list = field(default_factory=list)
    clip_total: float = 0.0
    mass_defect_total: float = 0.0
    snapshots: dict = field(default_factory=dict)

    def record(self, t, rho, u, theta, theta_inf, dx):
        self.times.append(t)
        self.order_param.append(order_parameter(rho, dx))
        self.theta.append(theta)
        self.theta_inf.append(theta_inf)
        self.max_u.append(float(np.max(np.abs(u))))


def run_macro(regime, rho0, background, T, grid, phi, zeta=None, potential=None,
              theta0=None, cfl=CFL_TRANSPORT, snapshot_times=(), on_step=None):
    """Interleaved three-stage stepping of the limiting system.

    Per step: (1) the background is advanced past t+dt and queried for
    u_inf, theta_inf; (2) the density is transported with the lagged
    velocity; (3) the velocity is refreshed by the implicit solve (and, in
    the weak regime, the internal variable by its relaxation ODE).

    regime is "strong" or "weak"; theta0 is required in the weak regime.
    Returns (rho, u, history).
    """
    if regime not in ("strong", "weak"):
        raise ConfigError(f"unknown macro regime {regime!r}")
    if regime == "weak" and theta0 is None:
        raise ConfigError("weak regime requires theta0")
    del zeta  # the limiting system carries no zeta term; accepted for symmetry

    dx = grid.dx
    rho = np.asarray(rho0, dtype=float).copy()
    rho, _ = clip_negative(rho, dx)
    phirow = influence_row(grid, phi)
    gradw_row = gradient_row(grid, potential)

    background.advance_to(0.0)
    theta_inf = background.theta_inf(0.0)
    theta = float(theta0) if regime == "weak" else theta_inf
    u = solve_velocity(rho, phirow, gradw_row, dx, background.u_inf(0.0),
                       theta_inf, theta)

    history = MacroHistory()
    history.record(0.0, rho, u, theta, theta_inf, dx)
    snap_left = sorted(snapshot_times)
    t = 0.0
    if snap_left and abs(snap_left[0] - 0.0) < 1e-12:
        history.snapshots[snap_left.pop(0)] = (rho.copy(), u.copy())

    while t < T - 1e-12:
        umax = max(float(np.max(np.abs(u))), 1e-6)
        dt = min(cfl * dx / umax, T - t)
        if snap_left:
            dt = min(dt, snap_left[0] - t)
        background.advance_to(t + dt)
        mass_before = dx * float(rho.sum())
        rho = transport_step(rho, u, dt, dx)
        history.mass_defect_total += abs(dx * float(rho.sum()) - mass_before)
        rho, clipped = clip_negative(rho, dx)
        history.clip_total += clipped
        t += dt
        theta_inf = background.theta_inf(t)
        if regime == "weak":
            theta = relax_theta_step(theta, t - dt, dt, background.theta_inf)
        else:
            theta = theta_inf
        u = solve_velocity(rho, phirow, gradw_row, dx, background.u_inf(t),
                           theta_inf, theta)
        history.record(t, rho, u, theta, theta_inf, dx)
        if snap_left and t >= snap_left[0] - 1e-12:
            history.snapshots[snap_left.pop(0)] = (rho.copy(), u.copy())
        if on_step is not None:
            on_step(t, rho, u, theta)
    return rho, u, history
