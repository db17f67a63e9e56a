"""Background hydrodynamic solver on the torus.

Conservative variables (rho, m = rho*u, E = rho*e) advanced by the
Nessyahu-Tadmor staggered central predictor-corrector with minmod slopes,
nonlocal alignment sources evaluated by the rectangle rule, and the published
mean quantities theta_inf(t), u_inf(t)/theta_inf(t) collected as an
append-only time series for the kinetic and macroscopic solvers.
"""

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import ConfigError, InstabilityError, PositivityError
from .torus import Grid1D, InfluenceFn, influence_row

RHO_FLOOR = 1e-10
CFL_DEFAULT = 0.45
WAVE_SPEED_PAD = 1.0


@dataclass(frozen=True)
class FluidState:
    """One staggered-central snapshot. parity 0 means nodes at i/M, parity 1
    means nodes at (i + 1/2)/M; index i of each array belongs to that node."""

    grid: Grid1D
    rho: np.ndarray
    m: np.ndarray
    E: np.ndarray
    t: float = 0.0
    parity: int = 0

    @property
    def nodes(self):
        return (np.arange(self.grid.M) + 0.5 * self.parity) * self.grid.dx

    @property
    def u(self):
        return self.m / np.maximum(self.rho, RHO_FLOOR)

    @property
    def e(self):
        return self.E / np.maximum(self.rho, RHO_FLOOR)

    def on_regular_grid(self):
        """(rho, u, e) interpolated back to the parity-0 nodes by two-point
        averages of the conservative variables."""
        if self.parity == 0:
            return self.rho, self.u, self.e
        rho = 0.5 * (self.rho + np.roll(self.rho, 1))
        m = 0.5 * (self.m + np.roll(self.m, 1))
        E = 0.5 * (self.E + np.roll(self.E, 1))
        return rho, m / np.maximum(rho, RHO_FLOOR), E / np.maximum(rho, RHO_FLOOR)


def make_state(grid, rho, u, e, t=0.0, parity=0):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise PositivityError("initial density must be positive")
    return FluidState(grid, rho.copy(), rho * u, rho * e, t, parity)


def tcs_source(state, phirow, zetarow):
    """Nonlocal alignment sources (S_m, S_E) on the current nodes; the density
    source is identically zero. Node positions cancel out of the kernel
    displacements, so the same cyclic rows serve both parities."""
    rho = state.rho
    if np.any(rho < RHO_FLOOR):
        raise PositivityError(f"density fell below the {RHO_FLOOR} floor at t={state.t}")
    u = state.m / rho
    e = state.E / rho
    return backends.fluid_sources(rho, u / e, 1.0 / e, phirow, zetarow, state.grid.dx)


def _flux(rho, m, E):
    denom = np.maximum(rho, RHO_FLOOR)
    return m, m * m / denom, m * E / denom


def max_wave_speed(state):
    return float(np.max(np.abs(state.u))) + WAVE_SPEED_PAD


def nt_step(state, dt, phirow, zetarow, cfl=CFL_DEFAULT):
    """One Nessyahu-Tadmor step; the result lives on the complementary
    staggered grid. dt must respect the CFL bound."""
    grid = state.grid
    dx = grid.dx
    if dt > cfl * dx / max_wave_speed(state) * (1 + 1e-12):
        raise ConfigError(f"dt={dt} violates the CFL bound at t={state.t}")

    w = np.stack([state.rho, state.m, state.E])
    fw = np.stack(_flux(state.rho, state.m, state.E))
    sm, se = tcs_source(state, phirow, zetarow)
    g = np.stack([np.zeros(grid.M), sm, se])

    # predictor at t + dt/2 on the same nodes
    half = backends.nt_predict(w, fw, g, dt, dx)
    fhalf = np.stack(_flux(half[0], half[1], half[2]))
    half_state = FluidState(grid, half[0], half[1], half[2],
                            state.t + 0.5 * dt, state.parity)
    shm, she = tcs_source(half_state, phirow, zetarow)
    ghalf = np.stack([np.zeros(grid.M), shm, she])

    # corrector on the staggered nodes between i and i+1
    out = backends.nt_correct(w, fhalf, ghalf, dt, dx)

    if state.parity == 1:
        # midpoints of ((i+1/2)/M, (i+3/2)/M) are the regular nodes (i+1)/M
        out = np.roll(out, 1, axis=1)
    new = FluidState(grid, out[0], out[1], out[2], state.t + dt, 1 - state.parity)
    if not np.all(np.isfinite(out)):
        raise InstabilityError(f"non-finite fluid state at t={new.t}")
    return new


def mean_quantities(state):
    """(theta_inf, u_inf/theta_inf, fluct_u, fluct_e) of the current state."""
    rho = state.rho
    if np.any(rho < RHO_FLOOR):
        raise PositivityError("density fell below the positivity floor")
    u = state.m / rho
    e = state.E / rho
    dx = state.grid.dx
    theta_inf = 1.0 / (dx * float(np.sum(rho / e)))
    u_ratio = dx * float(np.sum(rho * u / e))
    return theta_inf, u_ratio, float(u.max() - u.min()), float(e.max() - e.min())


@dataclass
class BackgroundRun:
    """Owns one fluid solve and publishes its mean-quantity series.

    The series is append-only; theta_inf(t) and u_inf(t)/theta_inf(t) between
    steps come from linear interpolation, so readers may query any t already
    covered while the solver keeps advancing.
    """

    state: FluidState
    phi: InfluenceFn
    zeta: InfluenceFn
    cfl: float = CFL_DEFAULT

    def __post_init__(self):
        self._phirow = influence_row(self.state.grid, self.phi)
        self._zetarow = influence_row(self.state.grid, self.zeta)
        self.times = [self.state.t]
        first = mean_quantities(self.state)
        self.theta_series = [first[0]]
        self.u_ratio_series = [first[1]]
        self.fluct_u_series = [first[2]]
        self.fluct_e_series = [first[3]]
        self._theta_bounds = (float(self.state.e.min()), float(self.state.e.max()))
        self._cons0 = self._conserved()
        self.max_conservation_drift = 0.0

    def _conserved(self):
        dx = self.state.grid.dx
        return np.array([dx * self.state.rho.sum(), dx * self.state.m.sum(),
                         dx * self.state.E.sum()])

    @property
    def t(self):
        return self.state.t

    @property
    def theta_envelope(self):
        """Initial envelope [min e0, max e0]; bounds every theta_inf(t)."""
        return self._theta_bounds

    def step(self):
        dt = self.cfl * self.state.grid.dx / max_wave_speed(self.state)
        self.state = nt_step(self.state, dt, self._phirow, self._zetarow, self.cfl)
        q = mean_quantities(self.state)
        self.times.append(self.state.t)
        self.theta_series.append(q[0])
        self.u_ratio_series.append(q[1])
        self.fluct_u_series.append(q[2])
        self.fluct_e_series.append(q[3])
        drift = np.abs(self._conserved() - self._cons0) / np.abs(self._cons0)
        self.max_conservation_drift = max(self.max_conservation_drift,
                                          float(drift.max()))
        return dt

    def advance_to(self, t_target):
        while self.state.t < t_target - 1e-13:
            self.step()

    def _interp(self, series, t):
        if t > self.times[-1] + 1e-12:
            raise ConfigError(
                f"background series covers [0, {self.times[-1]:.6g}] but t={t} was requested")
        return float(np.interp(t, self.times, series))

    def theta_inf(self, t):
        return self._interp(self.theta_series, t)

    def u_ratio(self, t):
        """u_inf(t) / theta_inf(t)."""
        return self._interp(self.u_ratio_series, t)

    def u_inf(self, t):
        return self.u_ratio(t) * self.theta_inf(t)

    def theta_inf_rate_fd(self):
        """Max |d theta_inf/dt| by finite differences of the stored series."""
        t = np.asarray(self.times)
        th = np.asarray(self.theta_series)
        if len(t) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(th) / np.diff(t))))

    def theta_inf_rate_bound(self):
        """A priori slope bound from the confinement envelope of e."""
        lo, hi = self._theta_bounds
        zeta_max = float(self.zeta(0.0)) if self.zeta is not None else 1.0
        return zeta_max * hi**2 / lo**5 * (hi - lo) ** 2

    def series_rows(self):
        return zip(self.times, self.theta_series, self.u_ratio_series,
                   self.fluct_u_series, self.fluct_e_series)


def frozen_background(theta_inf, u_inf, t_max=np.inf):
    """A constant background source, for decoupled tests and trivial regimes."""

    class _Frozen:
        def theta_inf(self, t):
            return theta_inf

        def u_ratio(self, t):
            return u_inf / theta_inf

        def u_inf(self, t):
            return u_inf

        @property
        def t(self):
            return t_max

        def advance_to(self, t):
            pass

    return _Frozen()
