"""Bob1's tunable-strength weak measurement.

A two-outcome measurement is described by pointer states: the system basis
states ``|up>``, ``|down>`` are correlated with pointer states
``|phi_up>``, ``|phi_down>``, which are read out in an orthonormal reading
basis ``{|phi_+1>, |phi_-1>}``. Two numbers characterize the pointers:

* quality factor ``F = <phi_down|phi_up>`` (disturbance; 1 means none),
* precision ``G = 1 - |<phi_-1|phi_up>|^2 - |<phi_+1|phi_down>|^2``.

The path-qubit pointers ``|phi_H> = cos t|0> + sin t|1>`` and
``|phi_V> = sin t|0> + cos t|1>`` give ``F = sin 2t`` and ``G = cos 2t``,
so ``F**2 + G**2 = 1``: the measurement is optimal for every ``t``.

Kraus sign convention
---------------------
Substituting those overlaps into ``M_k = <phi_k|phi_up> |up><up| +
<phi_k|phi_down> |down><down|`` gives nonnegative coefficients,
``M_+1 = cos t P_n + sin t P_-n`` and ``M_-1 = sin t P_n + cos t P_-n``.
That pair is what :func:`kraus_pair` returns. The alternative with a minus
sign on the second projector (:func:`printed_kraus_pair`) is what a bare
beam-displacer circuit with plates at ``t/2`` and ``pi/4 - t/2`` produces;
it equals the nonnegative pair followed by the unitary ``sigma . n`` and
therefore flips the transverse Bloch components seen by a later observer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qcore import (
    TOL,
    BlochDirection,
    DensityMatrix,
    apply_kraus,
    expectation,
    lift,
    observable_from_direction,
    projector,
)

__all__ = [
    "PointerPair",
    "WeakMeasurement",
    "KrausPair",
    "pointer_states",
    "quality_factor",
    "precision",
    "optimality_check",
    "kraus_pair",
    "printed_kraus_pair",
    "nonselective_channel",
    "dephasing_form",
    "outcome_probabilities",
    "outcome_probabilities_closed_form",
]

Z_AXIS = BlochDirection(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class PointerPair:
    """Overlaps of the two pointer states with the reading basis.

    ``a_up_plus = <phi_+1|phi_up>``, ``a_up_minus = <phi_-1|phi_up>``,
    ``a_down_plus = <phi_+1|phi_down>``, ``a_down_minus = <phi_-1|phi_down>``.
    """

    a_up_plus: complex
    a_up_minus: complex
    a_down_plus: complex
    a_down_minus: complex

    def __post_init__(self):
        up = abs(self.a_up_plus) ** 2 + abs(self.a_up_minus) ** 2
        down = abs(self.a_down_plus) ** 2 + abs(self.a_down_minus) ** 2
        if abs(up - 1) > TOL or abs(down - 1) > TOL:
            raise ValueError(f"pointer states not normalized: |phi_up|^2={up}, |phi_down|^2={down}")

    @property
    def phi_up(self) -> np.ndarray:
        return np.array([self.a_up_plus, self.a_up_minus], dtype=complex)

    @property
    def phi_down(self) -> np.ndarray:
        return np.array([self.a_down_plus, self.a_down_minus], dtype=complex)


@dataclass(frozen=True)
class WeakMeasurement:
    """Optimal weak measurement of ``sigma . axis`` with strength angle ``theta`` (radians)."""

    theta: float
    axis: BlochDirection = Z_AXIS

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi / 2 + TOL):
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")

    @property
    def F(self) -> float:
        return float(np.sin(2 * self.theta))

    @property
    def G(self) -> float:
        return float(np.cos(2 * self.theta))


@dataclass(frozen=True)
class KrausPair:
    m_plus: np.ndarray
    m_minus: np.ndarray

    def __post_init__(self):
        for name in ("m_plus", "m_minus"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.completeness_error() > TOL:
            raise ValueError("Kraus pair is not complete")

    def completeness_error(self) -> float:
        s = self.m_plus.conj().T @ self.m_plus + self.m_minus.conj().T @ self.m_minus
        return float(np.max(np.abs(s - np.eye(s.shape[0]))))

    def __getitem__(self, outcome: int) -> np.ndarray:
        if outcome == 1:
            return self.m_plus
        if outcome == -1:
            return self.m_minus
        raise KeyError(outcome)


def pointer_states(theta: float) -> PointerPair:
    """Path-qubit pointers for strength angle ``theta``; reading basis is paths 0, 1."""
    if not (0.0 <= theta <= np.pi / 2 + TOL):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    c, s = np.cos(theta), np.sin(theta)
    return PointerPair(a_up_plus=c, a_up_minus=s, a_down_plus=s, a_down_minus=c)


def quality_factor(pp: PointerPair) -> float:
    overlap = np.vdot(pp.phi_down, pp.phi_up)
    return float(overlap.real)


def precision(pp: PointerPair) -> float:
    return float(1.0 - abs(pp.a_up_minus) ** 2 - abs(pp.a_down_plus) ** 2)


def optimality_check(pp: PointerPair) -> tuple[float, bool]:
    """Return ``(F**2 + G**2, is_optimal)``.

    Raises
    ------
    ValueError
        If ``F**2 + G**2`` exceeds 1, which no physical pointer pair allows.
    """
    total = quality_factor(pp) ** 2 + precision(pp) ** 2
    if total > 1 + TOL:
        raise ValueError(f"F^2 + G^2 = {total} > 1: invalid pointer model")
    return total, abs(total - 1) <= TOL


def kraus_pair(wm: WeakMeasurement) -> KrausPair:
    pp = pointer_states(wm.theta)
    p_pos = projector(wm.axis, 1)
    p_neg = projector(wm.axis, -1)
    m_plus = pp.a_up_plus * p_pos + pp.a_down_plus * p_neg
    m_minus = pp.a_up_minus * p_pos + pp.a_down_minus * p_neg
    return KrausPair(m_plus, m_minus)


def printed_kraus_pair(wm: WeakMeasurement) -> KrausPair:
    """Signed variant ``cos t P_n - sin t P_-n`` and ``sin t P_n - cos t P_-n``.

    Kept for comparison only; see the module docstring.
    """
    c, s = np.cos(wm.theta), np.sin(wm.theta)
    p_pos = projector(wm.axis, 1)
    p_neg = projector(wm.axis, -1)
    return KrausPair(c * p_pos - s * p_neg, s * p_pos - c * p_neg)


def _lifted(rho: DensityMatrix, op: np.ndarray, qubit: Optional[int]) -> np.ndarray:
    if qubit is None:
        if rho.dim != 2:
            raise ValueError("state is not a single qubit; pass the qubit index")
        return op
    n = int(round(np.log2(rho.dim)))
    if 2**n != rho.dim:
        raise ValueError(f"dimension {rho.dim} is not a qubit register")
    return lift(op, qubit, n)


def nonselective_channel(
    rho: DensityMatrix, wm: WeakMeasurement, qubit: Optional[int] = None
) -> DensityMatrix:
    """State after the measurement when the outcome is discarded: ``sum_k M_k rho M_k^dag``."""
    kp = kraus_pair(wm)
    out = np.zeros_like(rho.matrix)
    for M in (kp.m_plus, kp.m_minus):
        branch, _ = apply_kraus(rho, _lifted(rho, M, qubit))
        out = out + branch.matrix
    return DensityMatrix(out, subnormalized=rho.subnormalized)


def dephasing_form(
    rho: DensityMatrix, wm: WeakMeasurement, qubit: Optional[int] = None
) -> DensityMatrix:
    """``F rho + (1 - F)(P_n rho P_n + P_-n rho P_-n)`` evaluated directly."""
    F = wm.F
    p_pos = _lifted(rho, projector(wm.axis, 1), qubit)
    p_neg = _lifted(rho, projector(wm.axis, -1), qubit)
    m = rho.matrix
    out = F * m + (1 - F) * (p_pos @ m @ p_pos + p_neg @ m @ p_neg)
    return DensityMatrix(out, subnormalized=rho.subnormalized)


def outcome_probabilities(rho: DensityMatrix, wm: WeakMeasurement) -> tuple[float, float]:
    """Born-rule probabilities of outcomes +1 and -1 on a single qubit."""
    if abs(rho.trace - 1) > TOL:
        raise ValueError("state must have unit trace")
    kp = kraus_pair(wm)
    _, p_plus = apply_kraus(rho, kp.m_plus)
    _, p_minus = apply_kraus(rho, kp.m_minus)
    return p_plus, p_minus


def outcome_probabilities_closed_form(rho: DensityMatrix, wm: WeakMeasurement) -> tuple[float, float]:
    # G * (1 +- <sigma>)/2 + (1 - G)/2
    G = wm.G
    m = expectation(rho, observable_from_direction(wm.axis))
    return G * 0.5 * (1 + m) + (1 - G) * 0.5, G * 0.5 * (1 - m) + (1 - G) * 0.5

