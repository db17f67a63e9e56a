"""Geometry on the unit torus [0,1): group arithmetic, geodesic distance,
influence functions, aggregation potentials, and periodic convolution.

This is the shared substrate for every solver in the package. All types are
frozen values; all operations are pure functions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backends
from . import _kernels_numpy as _np_kernels
from .errors import ConfigError, DimensionError

POT_NONE = _np_kernels.POT_NONE
POT_LOG_BUMP = _np_kernels.POT_LOG_BUMP
POT_CUCKER_DONG = _np_kernels.POT_CUCKER_DONG
POT_CUCKER_DONG_SCALED = _np_kernels.POT_CUCKER_DONG_SCALED


def wrap(a):
    """Canonical representative of [a] in [0, 1)."""
    return np.mod(a, 1.0)


def torus_add(a, b):
    return wrap(np.asarray(a, dtype=float) + b)


def torus_neg(a):
    return wrap(-np.asarray(a, dtype=float))


def torus_dist(a, b):
    """Geodesic distance |a - b + n| with the unique n putting a-b+n in
    (-1/2, 1/2]; ranges over [0, 1/2]."""
    return _np_kernels.torus_dist(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def torus_disp(a, b):
    """Signed displacement a - b + n in (-1/2, 1/2]."""
    return _np_kernels.torus_disp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def c_coefficient(lam):
    """Tail normalization 2^(2/lam) - 1, making the profile 1/2 at distance 1."""
    return 2.0 ** (2.0 / lam) - 1.0


@dataclass(frozen=True)
class InfluenceFn:
    """Radially symmetric, non-increasing communication weight.

    kind "regular":  phi(d) = (1 + c d^2)^(-lam/2), phi(0) = 1
    kind "singular": phi(d) = (eps^2 + c d^2)^(-lam/2), phi(0) = eps^(-lam)
    with c = 2^(2/lam) - 1.
    """

    lam: float
    kind: str = "regular"
    eps: float = 0.0
    c_lam: float = field(init=False)

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("influence exponent lam must be positive")
        if self.kind not in ("regular", "singular"):
            raise ConfigError(f"unknown influence kind {self.kind!r}")
        if self.kind == "singular" and self.eps <= 0:
            raise ConfigError("singular influence requires eps > 0")
        object.__setattr__(self, "c_lam", c_coefficient(self.lam))

    @property
    def eps2(self):
        return self.eps * self.eps if self.kind == "singular" else 0.0

    def __call__(self, d):
        """Evaluate at distance d >= 0 (scalar or array)."""
        return _np_kernels.influence(d, self.lam, self.c_lam, self.eps2)

    def at_points(self, x, origin=0.0):
        """Evaluate at torus points x against an origin."""
        return self(torus_dist(x, origin))


@dataclass(frozen=True)
class AggregationPotential:
    """Aggregation potential on the torus, exposed through its gradient.

    kinds:
      "none"                zero potential
      "periodic-log-bump"   eta(|x|)(log(1+|x|^2)/2 - log(5/4)/2), compactly
                            supported inside |x| < 1/3 so it closes up on the
                            torus; eta is 1 on [0,1/6] and 0 from 1/3 on
      "cucker-dong"         algebraic attractive family with exponent lam3
      "cucker-dong-scaled"  same family with eps^2 regularizing the origin
    """

    kind: str = "periodic-log-bump"
    lam3: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "periodic-log-bump", "cucker-dong", "cucker-dong-scaled"):
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if self.kind in ("cucker-dong", "cucker-dong-scaled") and self.lam3 <= 0:
            raise ConfigError("cucker-dong potential requires lam3 > 0")
        if self.kind == "cucker-dong-scaled" and self.eps <= 0:
            raise ConfigError("scaled potential requires eps > 0")

    @property
    def code(self):
        return {
            "none": POT_NONE,
            "periodic-log-bump": POT_LOG_BUMP,
            "cucker-dong": POT_CUCKER_DONG,
            "cucker-dong-scaled": POT_CUCKER_DONG_SCALED,
        }[self.kind]

    @property
    def params(self):
        """(p0, p1, p2) packed for the kernel backends."""
        if self.code in (POT_CUCKER_DONG, POT_CUCKER_DONG_SCALED):
            return self.lam3, c_coefficient(self.lam3), self.eps * self.eps
        return 0.0, 0.0, 0.0

    def gradient(self, s):
        """Gradient at signed displacement s in (-1/2, 1/2]; antisymmetric."""
        p0, p1, p2 = self.params
        return _np_kernels.grad_potential(np.asarray(s, dtype=float), self.code, p0, p1, p2)

    def gradient_at(self, x, y):
        """Gradient evaluated at the torus displacement x - y."""
        return self.gradient(torus_disp(x, y))


@dataclass(frozen=True)
class Grid1D:
    """Equispaced periodic grid; node i sits at x_i = i/M, dx = 1/M."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("grid size M must be >= 1")

    @property
    def dx(self):
        return 1.0 / self.M

    @property
    def nodes(self):
        return np.arange(self.M) * self.dx

    def integral(self, values):
        """Rectangle-rule integral dx * sum(values)."""
        return self.dx * float(np.sum(values))

def influence_row(grid, infl):
    """Cyclic kernel row of an InfluenceFn on the grid (ones when infl is
    None, the all-to-all kernel). krow[m] holds the kernel at torus
    displacement m*dx, which is all a cyclic convolution needs."""
    if infl is None:
        return np.ones(grid.M)
    return np.asarray(infl(torus_dist(grid.nodes, 0.0)), dtype=float)


def gradient_row(grid, pot):
    """Cyclic row of the (odd) potential gradient: row m holds
    gradW at the signed displacement of m*dx."""
    if pot is None or pot.kind == "none":
        return np.zeros(grid.M)
    return np.asarray(pot.gradient(torus_disp(grid.nodes, 0.0)), dtype=float)


def periodic_convolve(krow, g, dx=None):
    """Exact cyclic rectangle-rule convolution of a sampled kernel row with a
    grid function: (k*g)_i = dx sum_j k(x_i - x_j) g_j.

    krow[m] must hold the kernel at displacement m*dx (row 0 of the cyclic
    kernel matrix; every other row is a rotation of it).
    """
    krow = np.asarray(krow, dtype=float)
    g = np.asarray(g, dtype=float)
    if krow.shape != g.shape:
        raise DimensionError(
            f"kernel row has {krow.shape[0]} nodes but field has {g.shape[0]}")
    if dx is None:
        dx = 1.0 / krow.shape[0]
    return backends.convolve_direct(krow, g, dx)
