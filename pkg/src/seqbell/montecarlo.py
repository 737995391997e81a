"""Finite-statistics emulation of the coincidence-counting experiment.

Each setting combination ``(x, y1, y2)`` is recorded for a fixed window, so
its total is an independent Poisson draw; the eight outcome tallies are then
multinomial in the exact cell probabilities. Random streams come from a
Philox generator keyed by ``(seed, theta index, setting index)``, which makes
results independent of evaluation order.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import jsonschema
import numpy as np

from .bell import (
    JointDistribution,
    ScenarioSettings,
    chsh,
    correlation_ab1,
    correlation_ab2,
    default_settings,
    joint_distribution,
)
from .qcore import TOL, BlochDirection, DensityMatrix, expectation, projector, singlet

__all__ = [
    "REFERENCE_THETAS_DEG",
    "ExperimentConfig",
    "CountRecord",
    "SEstimate",
    "ExperimentPoint",
    "noise_parameters",
    "noisy_state",
    "visibilities",
    "sample_counts",
    "estimate_svalues",
    "bootstrap_sigma",
    "run_experiment",
    "noisy_svalues",
    "config_from_dict",
    "load_config",
    "CONFIG_SCHEMA",
]

logger = logging.getLogger(__name__)

REFERENCE_THETAS_DEG = (4.0, 16.4, 18.4, 20.5, 28.0)

_SIGN = np.array([1.0, -1.0])
# a*b1 and a*b2 for the eight (a, b1, b2) cells, C order
_AB1 = np.einsum("a,b,c->abc", _SIGN, _SIGN, np.ones(2)).reshape(8)
_AB2 = np.einsum("a,b,c->abc", _SIGN, np.ones(2), _SIGN).reshape(8)


@dataclass(frozen=True)
class ExperimentConfig:
    """Acquisition parameters. ``thetas`` are radians."""

    pair_rate: float = 3200.0
    window: float = 6.0
    vis_zx: float = 0.997
    vis_diag: float = 0.993
    seed: int = 2017
    thetas: tuple[float, ...] = field(default_factory=lambda: tuple(np.deg2rad(REFERENCE_THETAS_DEG)))

    def __post_init__(self):
        if not self.pair_rate > 0:
            raise ValueError("pair_rate must be positive")
        if not self.window >= 0:
            raise ValueError("window must be nonnegative")
        for name in ("vis_zx", "vis_diag"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))

    @property
    def mean_counts(self) -> float:
        return self.pair_rate * self.window


class CountRecord(NamedTuple):
    """``tallies[x, y1, y2, a, b1, b2]`` and ``totals[x, y1, y2]``."""

    tallies: np.ndarray
    totals: np.ndarray

    def frequencies(self) -> np.ndarray:
        t = self.totals[..., None, None, None]
        return self.tallies / t


class SEstimate(NamedTuple):
    s: float
    sigma: float
    sigmas_above_2: float


class ExperimentPoint(NamedTuple):
    theta: float
    ab1: SEstimate
    ab2: SEstimate
    counts: CountRecord


def noise_parameters(vis_zx: float, vis_diag: float) -> tuple[float, float]:
    """Solve for ``(dephasing, white)`` reproducing the two visibilities.

    The model state is ``(1 - w) [(1 - l) S + l D(S)] + w I/4`` where ``S`` is
    the singlet and ``D`` removes H/V coherences. Its visibilities are
    ``V_zx = 1 - w`` and ``V_diag = (1 - l)(1 - w)``.
    """
    if not (0 <= vis_zx <= 1 and 0 <= vis_diag <= 1):
        raise ValueError("visibilities must lie in [0, 1]")
    if vis_diag > vis_zx + TOL:
        raise ValueError(
            f"diagonal visibility {vis_diag} exceeds H/V visibility {vis_zx}; "
            "the dephasing + white-noise model cannot reach it"
        )
    white = 1.0 - vis_zx
    dephasing = 0.0 if vis_zx == 0 else min(1.0, max(0.0, 1.0 - vis_diag / vis_zx))
    return dephasing, white


def noisy_state(vis_zx: float, vis_diag: float) -> DensityMatrix:
    lam, w = noise_parameters(vis_zx, vis_diag)
    s = singlet().matrix
    dephased = np.diag(np.diag(s))
    rho = (1 - w) * ((1 - lam) * s + lam * dephased) + w * np.eye(4) / 4
    return DensityMatrix(rho)


def _fringe_visibility(rho: DensityMatrix, n: BlochDirection) -> float:
    # Alice fixed at the +1 analyzer, Bob switched between both analyzers
    pa = projector(n, 1)
    opposite = expectation(rho, np.kron(pa, projector(n, -1)))
    same = expectation(rho, np.kron(pa, projector(n, 1)))
    return (opposite - same) / (opposite + same)


def visibilities(rho: DensityMatrix) -> tuple[float, float]:
    """Coincidence visibilities of an anti-correlated state in the H/V and diagonal bases."""
    return _fringe_visibility(rho, BlochDirection(1.0, 0.0)), _fringe_visibility(rho, BlochDirection(0.0, 1.0))


def _substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def sample_counts(
    jd: JointDistribution,
    cfg: ExperimentConfig,
    rng: Optional[np.random.SeedSequence] = None,
) -> CountRecord:
    """Draw Poisson totals and multinomial tallies for every setting.

    ``rng`` is a :class:`numpy.random.SeedSequence`; each setting gets its own
    child stream keyed by its flat index. Defaults to ``cfg.seed``.
    """
    if rng is None:
        rng = np.random.SeedSequence(cfg.seed)
    probs = np.clip(jd.p.reshape(8, 8), 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    tallies = np.zeros((8, 8), dtype=np.int64)
    totals = np.zeros(8, dtype=np.int64)
    for k in range(8):
        gen = _substream(rng.entropy, *rng.spawn_key, k)
        n = gen.poisson(cfg.mean_counts)
        totals[k] = n
        tallies[k] = gen.multinomial(n, probs[k])
    return CountRecord(tallies.reshape((2,) * 6), totals.reshape(2, 2, 2))


def _setting_correlations(counts: CountRecord, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-setting correlation and its first-order Poisson variance."""
    n = counts.tallies.reshape(8, 8).astype(float)
    tot = counts.totals.reshape(8).astype(float)
    c = n @ weights / tot
    # d c / d n_k = (w_k - c) / T, var(n_k) = n_k
    var = ((weights[None, :] - c[:, None]) ** 2 * n).sum(axis=1) / tot**2
    return c.reshape(2, 2, 2), var.reshape(2, 2, 2)


_CHSH_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])


def _estimate(c: np.ndarray, var: np.ndarray, average_axis: int) -> SEstimate:
    table = c.mean(axis=average_axis)
    s = chsh(table)
    # each setting enters S once, weighted by sign / 2 from the averaging
    coef = np.expand_dims(_CHSH_SIGNS, average_axis) / 2.0
    sigma = float(np.sqrt(np.sum(coef**2 * var)))
    above = (s - 2.0) / sigma if sigma > 0 else float("inf") if s > 2 else float("-inf")
    return SEstimate(s, sigma, above)


def estimate_svalues(counts: CountRecord) -> tuple[SEstimate, SEstimate]:
    """S estimates for Alice-Bob1 and Alice-Bob2 with delta-method error bars.

    Correlations are averaged uniformly over the other Bob's input, matching
    :func:`seqbell.bell.correlation_ab1` and :func:`~seqbell.bell.correlation_ab2`.
    """
    if np.any(counts.totals <= 0):
        raise ValueError("every setting needs a nonzero number of coincidences")
    c1, v1 = _setting_correlations(counts, _AB1)
    c2, v2 = _setting_correlations(counts, _AB2)
    # axes are (x, y1, y2): average y2 for Bob1, y1 for Bob2
    return _estimate(c1, v1, 2), _estimate(c2, v2, 1)


def bootstrap_sigma(
    counts: CountRecord, n_resamples: int = 1000, seed: int = 0
) -> tuple[float, float]:
    """Parametric-bootstrap spread of the two S estimates (Poisson redraw of every cell)."""
    gen = np.random.Generator(np.random.Philox(seed))
    s1, s2 = [], []
    for _ in range(n_resamples):
        tallies = gen.poisson(counts.tallies)
        totals = tallies.sum(axis=(3, 4, 5))
        if np.any(totals == 0):
            continue
        a, b = estimate_svalues(CountRecord(tallies, totals))
        s1.append(a.s)
        s2.append(b.s)
    return float(np.std(s1, ddof=1)), float(np.std(s2, ddof=1))


def noisy_svalues(theta: float, cfg: ExperimentConfig, settings: Optional[ScenarioSettings] = None) -> tuple[float, float]:
    """Exact (infinite-statistics) S values for the noisy source."""
    jd = joint_distribution(noisy_state(cfg.vis_zx, cfg.vis_diag), settings or default_settings(), theta)
    return chsh(correlation_ab1(jd)), chsh(correlation_ab2(jd))


def run_experiment(
    cfg: ExperimentConfig,
    settings: Optional[ScenarioSettings] = None,
    max_workers: Optional[int] = None,
) -> list[ExperimentPoint]:
    settings = settings or default_settings()
    state = noisy_state(cfg.vis_zx, cfg.vis_diag)

    def point(i_theta):
        i, theta = i_theta
        jd = joint_distribution(state, settings, theta)
        counts = sample_counts(jd, cfg, np.random.SeedSequence(cfg.seed, spawn_key=(i,)))
        ab1, ab2 = estimate_svalues(counts)
        logger.debug("theta=%.4f S_AB1=%.4f+-%.4f S_AB2=%.4f+-%.4f", theta, ab1.s, ab1.sigma, ab2.s, ab2.sigma)
        return ExperimentPoint(theta, ab1, ab2, counts)

    items = list(enumerate(cfg.thetas))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            return list(ex.map(point, items))
    return [point(it) for it in items]


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": 1},
        "pair_rate": {"type": "number", "exclusiveMinimum": 0},
        "window": {"type": "number", "minimum": 0},
        "vis_zx": {"type": "number", "minimum": 0, "maximum": 1},
        "vis_diag": {"type": "number", "minimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "thetas_deg": {
            "type": "array",
            "items": {"type": "number", "minimum": 0, "maximum": 90},
        },
    },
    "required": ["version"],
    "additionalProperties": False,
}


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a config document (angles in degrees) and build the config.

    Missing fields take the reference-experiment defaults.
    """
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValueError(f"config field '{where}': {exc.message}") from None
    kw = {k: doc[k] for k in ("pair_rate", "window", "vis_zx", "vis_diag", "seed") if k in doc}
    if "thetas_deg" in doc:
        kw["thetas"] = tuple(np.deg2rad(doc["thetas_deg"]))
    cfg = ExperimentConfig(**kw)
    noise_parameters(cfg.vis_zx, cfg.vis_diag)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("config field '<root>': must be a JSON object")
    return config_from_dict(doc)
