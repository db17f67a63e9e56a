"""Experiment configuration: flat key/value files with sections, named
presets expanded in code so the reproduction recipes cannot drift, and
validation of the parameter couplings the solvers rely on.

Schema (INI syntax, all keys optional unless a scenario requires them):

    [run]      scenario, preset, M, T, cfl, seed, outdir
    [model]    lambda1, lambda2, lambda3, potential, theta0
    [kinetic]  epsilon, relaxation, kernels, N, theta_min, theta_max,
               sigma_v, bandwidth
    [sweep]    epsilons, snapshots
    [particle] N1, N2, kappa1, kappa2, kappa_c, kappa_a, nu1, nu2, nu_c,
               m1, m2, dt, v_spread, theta0_min, theta0_max

Scenarios: background-only, macro-strong, macro-weak, kinetic, particle,
epsilon-sweep.
"""

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kinetic import ScalingRegime, check_compatibility
from .torus import AggregationPotential, InfluenceFn, torus_dist

SCENARIOS = ("background-only", "macro-strong", "macro-weak", "kinetic",
             "particle", "epsilon-sweep")
PRESETS = ("paper-5.1", "paper-5.2", "uniform", "none")


def preset_background(name):
    """Initial (rho, u, e) profiles of the background fluid for a preset."""
    if name in ("paper-5.1", "paper-5.2"):
        return (lambda x: np.ones_like(x),
                lambda x: 0.5 + np.sin(2 * np.pi * x),
                lambda x: 2.0 + np.cos(2 * np.pi * x))
    if name == "uniform":
        return (lambda x: np.ones_like(x),
                lambda x: np.full_like(x, 0.5),
                lambda x: np.full_like(x, 2.0))
    raise ConfigError(f"preset {name!r} does not define a background")


def preset_density(name):
    """Initial limit density: normalized Gaussian bump at the antipode.

    The normalization constant is frozen on a fine reference grid so the
    same callable serves every grid size consistently.
    """
    if name in ("paper-5.1", "paper-5.2", "uniform"):
        fine = np.arange(8192) / 8192.0
        Z = float(np.mean(np.exp(-50.0 * torus_dist(fine, 0.5) ** 2)))

        def rho0(x):
            return np.exp(-50.0 * torus_dist(x, 0.5) ** 2) / Z

        return rho0
    raise ConfigError(f"preset {name!r} does not define a limit density")


def preset_theta0(name):
    """Initial scalar internal variable for the weak regime."""
    return 5.0 if name == "paper-5.2" else None


@dataclass
class ExperimentConfig:
    scenario: str
    preset: str = "paper-5.1"
    M: int = 256
    T: float = 20.0
    cfl: float = 0.45
    seed: int = 0
    outdir: str = "out"
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float | None = None
    potential: str = "periodic-log-bump"
    theta0: float | None = None
    epsilon: float | None = None
    relaxation: str = "strong"
    kernels: str = "regular"
    N: int = 2048
    theta_min: float = 1.85
    theta_max: float = 2.15
    sigma_v: float = 0.05
    bandwidth: float | None = None
    epsilons: tuple = (0.2, 0.1, 0.05)
    snapshots: tuple = (0.5, 1.0, 2.0)
    particle: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def phi(self):
        return InfluenceFn(lam=self.lambda1)

    @property
    def zeta(self):
        return InfluenceFn(lam=self.lambda2)

    def make_potential(self):
        if self.potential == "none":
            return None
        kwargs = {}
        if self.potential in ("cucker-dong", "cucker-dong-scaled"):
            if self.lambda3 is None:
                raise ConfigError("potential family requires key 'lambda3'")
            kwargs["lam3"] = self.lambda3
        if self.potential == "cucker-dong-scaled":
            if self.epsilon is None:
                raise ConfigError("scaled potential requires key 'epsilon'")
            kwargs["eps"] = self.epsilon
        return AggregationPotential(kind=self.potential, **kwargs)

    def scaling_regime(self, eps=None):
        eps = self.epsilon if eps is None else eps
        if eps is None:
            raise ConfigError("scenario requires key 'epsilon'")
        lam3 = self.lambda3 if self.potential == "cucker-dong-scaled" else None
        return ScalingRegime(relaxation=self.relaxation, kernels=self.kernels,
                             eps=eps, lam1=self.lambda1, lam2=self.lambda2,
                             lam3=lam3)

    def background_envelope(self):
        """(min, max) of the preset background internal-variable profile."""
        _, _, e0 = preset_background(self.preset)
        x = np.arange(4096) / 4096
        vals = e0(x)
        return float(np.min(vals)), float(np.max(vals))

    def canonical(self):
        d = {k: v for k, v in self.__dict__.items() if k != "raw"}
        d["epsilons"] = list(self.epsilons)
        d["snapshots"] = list(self.snapshots)
        return d

    def hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    text = parser.get(section, key).strip()
    if text == "":
        return default
    try:
        return cast(text)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from exc


def _floats(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def load_config(path):
    """Parse and validate an experiment configuration file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"parse error in {path}: {exc}") from exc

    scenario = _get(parser, "run", "scenario", str, None)
    if scenario is None:
        raise ConfigError("missing required key [run] scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    preset = _get(parser, "run", "preset", str, "paper-5.1")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {PRESETS}")

    cfg = ExperimentConfig(
        scenario=scenario,
        preset=preset,
        M=_get(parser, "run", "m", int, 256),
        T=_get(parser, "run", "t", float, 20.0),
        cfl=_get(parser, "run", "cfl", float, 0.45),
        seed=_get(parser, "run", "seed", int, 0),
        outdir=_get(parser, "run", "outdir", str, "out"),
        lambda1=_get(parser, "model", "lambda1", float, 1.0),
        lambda2=_get(parser, "model", "lambda2", float, 1.0),
        lambda3=_get(parser, "model", "lambda3", float, None),
        potential=_get(parser, "model", "potential", str, "periodic-log-bump"),
        theta0=_get(parser, "model", "theta0", float, preset_theta0(preset)),
        epsilon=_get(parser, "kinetic", "epsilon", float, None),
        relaxation=_get(parser, "kinetic", "relaxation", str, "strong"),
        kernels=_get(parser, "kinetic", "kernels", str, "regular"),
        N=_get(parser, "kinetic", "n", int, 2048),
        theta_min=_get(parser, "kinetic", "theta_min", float, 1.85),
        theta_max=_get(parser, "kinetic", "theta_max", float, 2.15),
        sigma_v=_get(parser, "kinetic", "sigma_v", float, 0.05),
        bandwidth=_get(parser, "kinetic", "bandwidth", float, None),
        epsilons=_get(parser, "sweep", "epsilons", _floats, (0.2, 0.1, 0.05)),
        snapshots=_get(parser, "sweep", "snapshots", _floats, (0.5, 1.0, 2.0)),
    )
    if parser.has_section("particle"):
        cfg.particle = {k: float(v) for k, v in parser.items("particle")}
    cfg.raw = {s: dict(parser.items(s)) for s in parser.sections()}
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.M < 8:
        raise ConfigError("grid size M must be at least 8")
    if cfg.T <= 0:
        raise ConfigError("horizon T must be positive")
    if not 0 < cfg.cfl <= 0.5:
        raise ConfigError("cfl must lie in (0, 0.5]")
    if cfg.potential not in ("none", "periodic-log-bump", "cucker-dong",
                             "cucker-dong-scaled"):
        raise ConfigError(f"unknown potential kind {cfg.potential!r}")
    if cfg.scenario in ("kinetic", "epsilon-sweep"):
        if cfg.scenario == "kinetic" and cfg.epsilon is None:
            raise ConfigError("kinetic scenario requires key 'epsilon'")
        if cfg.theta_min <= 0 or cfg.theta_max < cfg.theta_min:
            raise ConfigError("need 0 < theta_min <= theta_max")
        eps_list = [cfg.epsilon] if cfg.scenario == "kinetic" else cfg.epsilons
        env = cfg.background_envelope()
        for eps in eps_list:
            regime = cfg.scaling_regime(eps)  # validates lambda ranges
            check_compatibility(cfg.theta_min, cfg.theta_max, env[0], env[1],
                                regime=regime)
    if cfg.scenario == "macro-weak" and cfg.theta0 is None:
        raise ConfigError("macro-weak scenario requires key 'theta0'")
    if cfg.scenario in ("kinetic", "epsilon-sweep") and cfg.relaxation == "weak" \
            and cfg.theta0 is None:
        # midpoint-stratified sampling gives exactly this cloud mean
        cfg.theta0 = 0.5 * (cfg.theta_min + cfg.theta_max)
    if cfg.theta0 is not None and cfg.theta0 <= 0:
        raise ConfigError("theta0 must be positive")
    cfg.make_potential()
    return cfg


def output_root():
    """Directory under which run output directories are created; overridden
    by the TCSFLOCK_OUTPUT_ROOT environment variable."""
    return os.environ.get("TCSFLOCK_OUTPUT_ROOT", ".")
