"""Two-species interacting particle system on the torus.

Species couple all-to-all: alignment of velocity and internal variable inside
each species (weighted so self-interactions survive a large partner species),
aggregation inside the first species, and symmetric cross alignment between
the species. The classic single-species models are the special cases with one
species and selected couplings switched off.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import backends
from .errors import ConfigError, DomainError, StiffnessError
from .torus import AggregationPotential, InfluenceFn, wrap

THETA_FLOOR = 1e-6
_NO_POT = (0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Couplings:
    """Coupling strengths: kappa_* for velocities, nu_* for internal
    variables, kappa_a for aggregation; masses of the two species."""

    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa_c: float = 0.0
    kappa_a: float = 0.0
    nu1: float = 1.0
    nu2: float = 1.0
    nu_c: float = 0.0
    m1: float = 1.0
    m2: float = 1.0


@dataclass(frozen=True)
class Kernels:
    """Influence functions per interaction channel; None means identically 1."""

    phi1: InfluenceFn | None = None
    phi2: InfluenceFn | None = None
    phi_c: InfluenceFn | None = None
    zeta1: InfluenceFn | None = None
    zeta2: InfluenceFn | None = None
    zeta_c: InfluenceFn | None = None
    potential: AggregationPotential | None = None


@dataclass
class TwoSpeciesSystem:
    """State arrays of both species plus the interaction data.

    The mean-field weights are w1 = N/N1 and w2 = N/N2 with N = N1 + N2, so
    self-interaction sums keep order one when the species sizes separate. The
    bookkeeping identity w1 N1 + w2 N2 = 2N holds by construction.
    """

    x1: np.ndarray
    v1: np.ndarray
    th1: np.ndarray
    x2: np.ndarray
    v2: np.ndarray
    th2: np.ndarray
    couplings: Couplings = field(default_factory=Couplings)
    kernels: Kernels = field(default_factory=Kernels)
    t: float = 0.0

    def __post_init__(self):
        for th in (self.th1, self.th2):
            if th.size and np.any(th <= 0):
                raise DomainError("internal variables must be positive")

    @property
    def n1(self):
        return self.x1.shape[0]

    @property
    def n2(self):
        return self.x2.shape[0]

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def weights(self):
        n = self.n
        w1 = n / self.n1 if self.n1 else 0.0
        w2 = n / self.n2 if self.n2 else 0.0
        return w1, w2


def single_species(x, v, th, kappa=1.0, nu=1.0, phi=None, zeta=None,
                   kappa_a=0.0, potential=None):
    """A pure one-species system (second species empty, cross terms void)."""
    empty = np.empty(0)
    cpl = Couplings(kappa1=kappa, nu1=nu, kappa_a=kappa_a)
    ker = Kernels(phi1=phi, zeta1=zeta, potential=potential)
    return TwoSpeciesSystem(np.asarray(x, dtype=float), np.asarray(v, dtype=float),
                            np.asarray(th, dtype=float), empty, empty.copy(),
                            empty.copy(), cpl, ker)


def _infl_params(infl):
    # lam=1 with c=0 evaluates to the constant kernel 1
    if infl is None:
        return 1.0, 0.0, 0.0
    return infl.lam, infl.c_lam, infl.eps2


def _self_terms(x, v, th, phi, zeta, potential):
    ones = np.full(x.shape[0], 1.0)
    lam1, c1, e1 = _infl_params(phi)
    lam2, c2, e2 = _infl_params(zeta)
    if potential is None:
        code, p0, p1, p2 = _NO_POT
    else:
        code = potential.code
        p0, p1, p2 = potential.params
    sphi, pphi, szeta, qzeta, hagg = backends.pairwise_alignment(
        x, v, th, ones, lam1, c1, e1, lam2, c2, e2, code, p0, p1, p2)
    align_v = pphi - sphi * v / th
    align_th = szeta / th - qzeta
    return align_v, align_th, hagg


def micro_rhs(system):
    """Time derivative of every agent state.

    Self-interaction sums carry the species weight over N, cross sums carry
    1/N, matching the weighted mean-field scaling; the aggregation term uses
    the same weighted 1/N normalization so it stays order one alongside the
    alignment forces. Returns (dx1, dv1, dth1, dx2, dv2, dth2).
    """
    if (system.th1.size and np.any(system.th1 <= 0)) or \
            (system.th2.size and np.any(system.th2 <= 0)):
        raise DomainError("internal variables must be positive")
    cpl, ker = system.couplings, system.kernels
    n = system.n
    w1, w2 = system.weights
    out = []
    for (x, v, th, xo, vo, tho, w, kappa, nu, phi, zeta, pot, kap_a, mass) in (
        (system.x1, system.v1, system.th1, system.x2, system.v2, system.th2,
         w1, cpl.kappa1, cpl.nu1, ker.phi1, ker.zeta1, ker.potential,
         cpl.kappa_a, cpl.m1),
        (system.x2, system.v2, system.th2, system.x1, system.v1, system.th1,
         w2, cpl.kappa2, cpl.nu2, ker.phi2, ker.zeta2, None, 0.0, cpl.m2),
    ):
        if x.size == 0:
            out.extend([np.empty(0)] * 3)
            continue
        align_v, align_th, hagg = _self_terms(x, v, th, phi, zeta, pot)
        dv = w * (kappa / n) * align_v + w * (kap_a / n) * hagg
        dth = w * (nu / n) * align_th
        if xo.size and (cpl.kappa_c or cpl.nu_c):
            lam, c_lam, epssq = _infl_params(ker.phi_c)
            fv, _ = backends.cross_alignment(x, v, th, xo, vo, tho, lam, c_lam, epssq)
            lam, c_lam, epssq = _infl_params(ker.zeta_c)
            _, fth = backends.cross_alignment(x, v, th, xo, vo, tho, lam, c_lam, epssq)
            dv = dv + (cpl.kappa_c / n) * fv
            dth = dth + (cpl.nu_c / n) * fth
        out.extend([v.copy(), dv / mass, dth])
    return tuple(out)


def _rk4_stage(system, deriv, h):
    return replace(
        system,
        x1=wrap(system.x1 + h * deriv[0]), v1=system.v1 + h * deriv[1],
        th1=system.th1 + h * deriv[2],
        x2=wrap(system.x2 + h * deriv[3]), v2=system.v2 + h * deriv[4],
        th2=system.th2 + h * deriv[5],
        t=system.t + h,
    )


def _theta_ok(system):
    return (not system.th1.size or system.th1.min() > THETA_FLOOR) and \
           (not system.th2.size or system.th2.min() > THETA_FLOOR)


def rk4_step(system, dt):
    """One classical RK4 step; halves dt and retries whenever any internal
    variable dips under the positivity floor during the stages."""
    h = dt
    while True:
        try:
            k1 = micro_rhs(system)
            s2 = _rk4_stage(system, k1, 0.5 * h)
            if not _theta_ok(s2):
                raise DomainError
            k2 = micro_rhs(s2)
            s3 = _rk4_stage(system, k2, 0.5 * h)
            if not _theta_ok(s3):
                raise DomainError
            k3 = micro_rhs(s3)
            s4 = _rk4_stage(system, k3, h)
            if not _theta_ok(s4):
                raise DomainError
            k4 = micro_rhs(s4)
            comb = tuple((a + 2 * b + 2 * c + d) / 6.0
                         for a, b, c, d in zip(k1, k2, k3, k4))
            nxt = _rk4_stage(system, comb, h)
            if not _theta_ok(nxt):
                raise DomainError
            return nxt, h
        except DomainError:
            h *= 0.5
            if h < 1e-12:
                raise StiffnessError(
                    "particle step size underflowed below 1e-12; increase the "
                    "relaxation scale or use the kinetic solver's stiff path")


def integrate(system, dt, T, record_every=1):
    """March the system to time T with RK4 (positivity-guarded steps).

    Returns the list of recorded states, first and last included. Positions
    are reduced to canonical torus representatives every stage.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    states = [system]
    steps = int(round(T / dt))
    for k in range(steps):
        target = (k + 1) * dt
        while system.t < target - 1e-12:
            system, _ = rk4_step(system, min(dt, target - system.t))
        if (k + 1) % record_every == 0 or k == steps - 1:
            states.append(system)
    return states


def empirical_moments(x, v, th, M, bandwidth=None):
    """Kernel-density deposit of (mass, momentum, internal variable) onto an
    M-node grid; the mass field integrates to exactly 1. Default bandwidth
    is two grid cells."""
    n = x.shape[0]
    if bandwidth is None:
        bandwidth = 2.0 / M
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    w = np.full(n, 1.0 / n)
    vals = np.stack([w, w * v, w * th])
    rho, j, h = backends.deposit_periodic(np.asarray(x, dtype=float), vals, M, bandwidth)
    return rho, j, h


def momentum(system):
    """m1 sum v1 + m2 sum v2."""
    cpl = system.couplings
    return cpl.m1 * float(system.v1.sum()) + cpl.m2 * float(system.v2.sum())


def write_trajectory_csv(path, states):
    """CSV export with rows t, species, agent_id, x, v, theta."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "species", "agent_id", "x", "v", "theta"])
        for st in states:
            for sp, (x, v, th) in enumerate(((st.x1, st.v1, st.th1),
                                             (st.x2, st.v2, st.th2)), start=1):
                for i in range(x.shape[0]):
                    writer.writerow([repr(float(st.t)), sp, i, repr(float(x[i])),
                                     repr(float(v[i])), repr(float(th[i]))])
