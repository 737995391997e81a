"""Sequential CHSH scenario: Alice | Bob1 (weak) -> Bob2 (strong).

Alice measures qubit 0 projectively. Bob1 applies the weak-measurement
instrument to qubit 1 and passes the qubit on to Bob2, who measures it
projectively without knowing Bob1's input. Outcome index 0 stands for +1 and
index 1 for -1 throughout.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .qcore import (
    IDENTITY,
    TOL,
    BlochDirection,
    DensityMatrix,
    partial_trace,
    projector,
    singlet,
)
from .weakmeas import WeakMeasurement, kraus_pair, pointer_states

__all__ = [
    "OUTCOMES",
    "TSIRELSON",
    "ScenarioSettings",
    "JointDistribution",
    "SValues",
    "SweepPoint",
    "joint_distribution",
    "joint_distribution_oracle",
    "correlation_ab1",
    "correlation_ab2",
    "chsh",
    "predicted_svalues",
    "simulated_svalues",
    "default_settings",
    "double_violation_window",
    "sweep",
]

OUTCOMES = (1, -1)
TSIRELSON = 2 * np.sqrt(2)

_SIGN = np.array([1.0, -1.0])

_DIR_Z = BlochDirection(1.0, 0.0)
_DIR_X = BlochDirection(0.0, 1.0)
_DIR_MZ_PX = BlochDirection.normalized(-1.0, 1.0)   # (-Z+X)/sqrt2
_DIR_MZ_MX = BlochDirection.normalized(-1.0, -1.0)  # -(Z+X)/sqrt2

# Found by enumerate_index_mappings(); frozen so the sign pattern of chsh()
# yields +2*sqrt(2) on the singlet with strong measurements.
_ALICE_ORDER = (_DIR_Z, _DIR_X)
_BOB_ORDER = (_DIR_MZ_MX, _DIR_MZ_PX)


@dataclass(frozen=True)
class ScenarioSettings:
    alice: tuple[BlochDirection, BlochDirection]
    bob1: tuple[BlochDirection, BlochDirection]
    bob2: tuple[BlochDirection, BlochDirection]

    def __post_init__(self):
        for name in ("alice", "bob1", "bob2"):
            dirs = tuple(getattr(self, name))
            if len(dirs) != 2 or not all(isinstance(d, BlochDirection) for d in dirs):
                raise ValueError(f"{name} needs exactly two BlochDirection inputs")
            object.__setattr__(self, name, dirs)


class JointDistribution:
    """``p[x, y1, y2, a, b1, b2]`` with outcome index 0 <-> +1, 1 <-> -1."""

    def __init__(self, p: np.ndarray, check: bool = True):
        p = np.array(p, dtype=float)
        if p.shape != (2,) * 6:
            raise ValueError(f"joint distribution must have shape (2,)*6, got {p.shape}")
        p.setflags(write=False)
        self.p = p
        if check:
            self.validate()

    def validate(self, tol: float = TOL) -> None:
        if self.p.min() < -tol or self.p.max() > 1 + tol:
            raise ValueError("probability outside [0, 1]")
        sums = self.p.sum(axis=(3, 4, 5))
        if np.max(np.abs(sums - 1)) > tol:
            raise ValueError("conditional distributions do not sum to 1")

    def signaling(self) -> dict[str, float]:
        """Largest violation of each no-signaling condition.

        * ``b2_to_ab1``: P(a, b1 | x, y1, y2) depends on y2
        * ``bob_to_a``: P(a | x, y1, y2) depends on (y1, y2)
        * ``alice_to_bobs``: P(b1, b2 | x, y1, y2) depends on x
        """
        p = self.p
        ab1 = p.sum(axis=5)  # x y1 y2 a b1
        a = p.sum(axis=(4, 5))  # x y1 y2 a
        bobs = p.sum(axis=3)  # x y1 y2 b1 b2
        return {
            "b2_to_ab1": float(np.max(np.abs(ab1 - ab1[:, :, :1]))),
            "bob_to_a": float(np.max(np.abs(a - a[:, :1, :1]))),
            "alice_to_bobs": float(np.max(np.abs(bobs - bobs[:1]))),
        }

    def __getitem__(self, key):
        return self.p[key]


@dataclass(frozen=True)
class SValues:
    s_ab1: float
    s_ab2: float

    def __post_init__(self):
        for v in (self.s_ab1, self.s_ab2):
            if v < -TOL or v > TSIRELSON + 1e-9:
                raise ValueError(f"S value {v} outside [0, 2*sqrt(2)]")

    @property
    def violations(self) -> tuple[bool, bool]:
        return self.s_ab1 > 2, self.s_ab2 > 2


class SweepPoint(NamedTuple):
    theta: float
    analytic: SValues
    simulated: SValues


def _check_two_qubit(state: DensityMatrix) -> None:
    if state.dim != 4:
        raise ValueError(f"expected a two-qubit state, got dimension {state.dim}")
    if abs(state.trace - 1) > TOL:
        raise ValueError("state must have unit trace")


def joint_distribution(state: DensityMatrix, settings: ScenarioSettings, theta: float) -> JointDistribution:
    """All 64 probabilities ``P(a b1 b2 | x y1 y2)`` via Bob1's Kraus operators."""
    _check_two_qubit(state)
    rho = state.matrix
    p = np.empty((2,) * 6)
    for y1 in range(2):
        kp = kraus_pair(WeakMeasurement(theta, settings.bob1[y1]))
        for ib1, b1 in enumerate(OUTCOMES):
            K = np.kron(IDENTITY, kp[b1])
            branch = K @ rho @ K.conj().T
            for x, y2 in itertools.product(range(2), range(2)):
                for (ia, a), (ib2, b2) in itertools.product(enumerate(OUTCOMES), enumerate(OUTCOMES)):
                    eff = np.kron(projector(settings.alice[x], a), projector(settings.bob2[y2], b2))
                    p[x, y1, y2, ia, ib1, ib2] = np.trace(eff @ branch).real
    return JointDistribution(p)


def _interaction_unitary(wm: WeakMeasurement) -> np.ndarray:
    """Unitary on Bob (x) pointer taking ``|n>|0> -> |n>|phi_H>`` and ``|-n>|0> -> |-n>|phi_V>``."""
    pp = pointer_states(wm.theta)

    def rotation_to(col):
        # real rotation whose first column is the given pointer state
        c, s = col
        return np.array([[c, -s], [s, c]], dtype=complex)

    return np.kron(projector(wm.axis, 1), rotation_to(pp.phi_up)) + np.kron(
        projector(wm.axis, -1), rotation_to(pp.phi_down)
    )


def joint_distribution_oracle(state: DensityMatrix, settings: ScenarioSettings, theta: float) -> JointDistribution:
    """Same table from an explicit system-pointer simulation, without Kraus operators.

    The pointer qubit starts in ``|0>``, becomes entangled with Bob's qubit by
    a unitary interaction, and is read out projectively in ``{|0>, |1>}``
    (``|0>`` means +1). Alice's and Bob2's projectors act on the three-qubit
    state; the pointer is then traced out.
    """
    _check_two_qubit(state)
    pointer0 = np.diag([1.0, 0.0]).astype(complex)
    rho3 = np.kron(state.matrix, pointer0)
    reads = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
    p = np.empty((2,) * 6)
    for y1 in range(2):
        U = np.kron(IDENTITY, _interaction_unitary(WeakMeasurement(theta, settings.bob1[y1])))
        evolved = U @ rho3 @ U.conj().T
        for ib1 in range(2):
            read = np.kron(np.eye(4), reads[ib1])
            after = DensityMatrix(read @ evolved @ read, subnormalized=True, check=False)
            sys = partial_trace(after, keep=[0, 1], dims=[2, 2, 2]).matrix
            for x, y2 in itertools.product(range(2), range(2)):
                for (ia, a), (ib2, b2) in itertools.product(enumerate(OUTCOMES), enumerate(OUTCOMES)):
                    eff = np.kron(projector(settings.alice[x], a), projector(settings.bob2[y2], b2))
                    p[x, y1, y2, ia, ib1, ib2] = np.trace(eff @ sys).real
    return JointDistribution(p)


def _check_no_signaling(jd: JointDistribution, tol: float) -> None:
    worst = jd.signaling()
    bad = {k: v for k, v in worst.items() if v > tol}
    if bad:
        raise ValueError(f"no-signaling violated: {bad}")


def correlation_ab1(jd: JointDistribution, tol: float = TOL) -> np.ndarray:
    """``c[x, y1] = sum a*b1 P(a b1 | x y1)``; Bob2's input is averaged out."""
    _check_no_signaling(jd, tol)
    pab1 = jd.p.sum(axis=5).mean(axis=2)  # x y1 a b1
    return np.einsum("xyab,a,b->xy", pab1, _SIGN, _SIGN)


def correlation_ab2(jd: JointDistribution, tol: float = TOL) -> np.ndarray:
    """``c[x, y2] = sum a*b2 P(a b2 | x y2)`` averaged uniformly over Bob1's input."""
    _check_no_signaling(jd, tol)
    pab2 = jd.p.sum(axis=4).mean(axis=1)  # x y2 a b2
    return np.einsum("xyab,a,b->xy", pab2, _SIGN, _SIGN)


def chsh(c) -> float:
    c = np.asarray(c, dtype=float)
    return float(abs(c[0, 0] + c[0, 1] + c[1, 0] - c[1, 1]))


def predicted_svalues(theta: float) -> SValues:
    """Closed-form S values for the singlet with optimal settings."""
    if not (0.0 <= theta <= np.pi / 2 + TOL):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    F, G = np.sin(2 * theta), np.cos(2 * theta)
    return SValues(float(TSIRELSON * abs(G)), float(np.sqrt(2) * (1 + F)))


def simulated_svalues(state: DensityMatrix, settings: ScenarioSettings, theta: float) -> SValues:
    jd = joint_distribution(state, settings, theta)
    return SValues(chsh(correlation_ab1(jd)), chsh(correlation_ab2(jd)))


def default_settings() -> ScenarioSettings:
    """Alice {Z, X}; both Bobs {-(Z+X)/sqrt2, (-Z+X)/sqrt2}."""
    return ScenarioSettings(alice=_ALICE_ORDER, bob1=_BOB_ORDER, bob2=_BOB_ORDER)


def enumerate_index_mappings() -> list[tuple[ScenarioSettings, float]]:
    """Every input-index assignment of the four quoted directions, with its strong-strong singlet S."""
    out = []
    rho = singlet()
    for alice in itertools.permutations((_DIR_Z, _DIR_X)):
        for bob in itertools.permutations((_DIR_MZ_PX, _DIR_MZ_MX)):
            st = ScenarioSettings(alice=alice, bob1=bob, bob2=bob)
            jd = joint_distribution(rho, st, 0.0)
            out.append((st, chsh(correlation_ab1(jd))))
    return out


def double_violation_window() -> tuple[float, float]:
    """Open interval of theta (radians) where both closed-form S values exceed 2."""
    lower = 0.5 * np.arcsin(np.sqrt(2) - 1)  # sqrt2 (1 + sin 2t) = 2
    upper = 0.5 * np.arccos(1 / np.sqrt(2))  # 2 sqrt2 cos 2t = 2
    return float(lower), float(upper)


def sweep(
    thetas: Iterable[float],
    settings: Optional[ScenarioSettings] = None,
    state: Optional[DensityMatrix] = None,
    max_workers: Optional[int] = None,
) -> list[SweepPoint]:
    """Analytic and simulated S values per theta, in input order."""
    settings = settings or default_settings()
    state = state or singlet()
    thetas: Sequence[float] = list(thetas)

    def point(t):
        return SweepPoint(t, predicted_svalues(t), simulated_svalues(state, settings, t))

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            return list(ex.map(point, thetas))
    return [point(t) for t in thetas]
