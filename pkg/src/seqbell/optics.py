"""Jones-calculus model of the beam-displacer weak-measurement box.

Mode space is path (x) polarization with basis ordering
``(p0 H, p0 V, p1 H, p1 V)``. The photon enters on path 0.

Element conventions:

* half-wave plate at angle ``a``: ``[[cos 2a, sin 2a], [sin 2a, -cos 2a]]``
  on the paths it covers, identity elsewhere;
* beam displacer: V keeps its path, H is displaced to the other path
  (a lossless swap of the two H modes).

With the strength plates at ``theta/2`` and ``pi/4 - theta/2``, the raw box
outputs ``cos t |H><H| - sin t |V><V|`` on path 0 and the polarization-flipped
``sin t |V><H| + cos t |H><V|`` on path 1. Two fixed compensation plates
(0 deg on path 0, 45 deg on path 1) turn these into the nonnegative Kraus
pair. ``compensate=False`` builds the bare box instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .qcore import EQUIV_TOL, BlochDirection
from .weakmeas import KrausPair, WeakMeasurement, kraus_pair

__all__ = [
    "OpticalElement",
    "Circuit",
    "hwp_matrix",
    "bd_matrix",
    "build_fig2a_circuit",
    "build_fig2b_circuit",
    "compile_to_kraus",
    "verify_equivalence",
    "measurement_axis",
    "fig2_deviations",
    "unitarity_defect",
]

INPUT_PATH = 0


def hwp_matrix(angle: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``angle`` radians from H."""
    c, s = np.cos(2 * angle), np.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def bd_matrix() -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[2, 0] = 1  # p0 H -> p1 H
    m[0, 2] = 1  # p1 H -> p0 H
    m[1, 1] = 1  # V undisplaced
    m[3, 3] = 1
    return m


def measurement_axis(phi: float) -> BlochDirection:
    """Bloch direction measured when the basis plates sit at ``phi/2``.

    A plate at ``phi/2`` maps linear polarization at angle ``phi`` onto H,
    which is Bloch angle ``2*phi`` in the z-x plane.
    """
    return BlochDirection.from_angle(2 * phi)


@dataclass(frozen=True)
class OpticalElement:
    kind: str
    angle: float = 0.0
    paths: tuple[int, ...] = (0, 1)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("HWP", "BD"):
            raise ValueError(f"unknown element kind {self.kind!r}")
        paths = tuple(int(p) for p in self.paths)
        if any(p not in (0, 1) for p in paths):
            raise ValueError(f"paths must be drawn from (0, 1), got {paths}")
        object.__setattr__(self, "paths", paths)

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "BD":
            return bd_matrix()
        blocks = [hwp_matrix(self.angle) if p in self.paths else np.eye(2) for p in (0, 1)]
        m = np.zeros((4, 4), dtype=complex)
        m[:2, :2] = blocks[0]
        m[2:, 2:] = blocks[1]
        return m

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "HWP":
            d["angle_deg"] = float(np.rad2deg(self.angle))
            d["paths"] = list(self.paths)
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalElement":
        kind = d.get("kind")
        if kind == "BD":
            return cls("BD", label=d.get("label", ""))
        if kind == "HWP":
            if "angle_deg" not in d:
                raise ValueError("HWP element missing 'angle_deg'")
            return cls(
                "HWP",
                float(np.deg2rad(d["angle_deg"])),
                tuple(d.get("paths", (0, 1))),
                d.get("label", ""),
            )
        raise ValueError(f"unknown element kind {kind!r}")


@dataclass(frozen=True)
class Circuit:
    """Ordered elements plus the output path that carries each outcome."""

    elements: tuple[OpticalElement, ...]
    ports: dict = field(default_factory=lambda: {1: 0, -1: 1})

    def unitary(self) -> np.ndarray:
        u = np.eye(4, dtype=complex)
        for el in self.elements:
            u = el.matrix @ u
        return u

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "elements": [el.to_dict() for el in self.elements],
            "ports": {str(k): v for k, v in self.ports.items()},
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        if doc.get("version") != 1:
            raise ValueError("circuit document needs \"version\": 1")
        elements = tuple(OpticalElement.from_dict(d) for d in doc["elements"])
        ports = {int(k): int(v) for k, v in doc.get("ports", {"1": 0, "-1": 1}).items()}
        return cls(elements, ports)


def _core(theta: float, hwp3_offset: float = 0.0) -> list[OpticalElement]:
    return [
        OpticalElement("BD", label="BD1"),
        OpticalElement("HWP", theta / 2, (1,), "HWP2"),
        OpticalElement("HWP", np.pi / 4 - theta / 2 + hwp3_offset, (0,), "HWP3"),
        OpticalElement("BD", label="BD2"),
    ]


def _check_theta(theta: float) -> None:
    if not (0.0 <= theta <= np.pi / 2 + 1e-12):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")


def build_fig2a_circuit(
    theta: float, phi: float, compensate: bool = True, hwp3_offset: float = 0.0
) -> Circuit:
    """Two-port box: outcome +1 exits on path 0, outcome -1 on path 1.

    ``hwp3_offset`` detunes HWP3 and exists for negative-control checks.
    """
    _check_theta(theta)
    els = [OpticalElement("HWP", phi / 2, (INPUT_PATH,), "HWP1")]
    els += _core(theta, hwp3_offset)
    if compensate:
        els += [
            OpticalElement("HWP", 0.0, (0,), "C0"),
            OpticalElement("HWP", np.pi / 4, (1,), "C1"),
        ]
    els += [
        OpticalElement("HWP", phi / 2, (0,), "HWP4"),
        OpticalElement("HWP", phi / 2, (1,), "HWP5"),
    ]
    return Circuit(tuple(els), {1: 0, -1: 1})


def build_fig2b_circuit(
    theta: float, phi: float, select: int, compensate: bool = True, hwp3_offset: float = 0.0
) -> Circuit:
    """Single-port box; the basis plates pick which Kraus branch leaves path 0."""
    _check_theta(theta)
    if select not in (1, -1):
        raise ValueError(f"select must be +1 or -1, got {select!r}")
    basis = phi / 2 if select == 1 else phi / 2 + np.pi / 4
    els = [OpticalElement("HWP", basis, (INPUT_PATH,), "HWP1")]
    els += _core(theta, hwp3_offset)
    if compensate:
        els.append(OpticalElement("HWP", 0.0, (0,), "C0"))
    els.append(OpticalElement("HWP", basis, (0,), "HWP4"))
    return Circuit(tuple(els), {select: 0})


def compile_to_kraus(c: Circuit) -> Union[KrausPair, np.ndarray]:
    """Polarization operator from the input path to each designated output path.

    Returns a :class:`KrausPair` for a two-port circuit and the single 2x2
    operator for a one-port circuit.
    """
    if unitarity_defect(c) > EQUIV_TOL:
        raise ValueError("circuit composition is not unitary")
    u = c.unitary()
    cols = slice(2 * INPUT_PATH, 2 * INPUT_PATH + 2)
    ops = {k: u[2 * p : 2 * p + 2, cols] for k, p in c.ports.items()}
    if set(ops) == {1, -1}:
        return KrausPair(ops[1], ops[-1])
    if len(ops) == 1:
        return next(iter(ops.values()))
    raise ValueError(f"unsupported port designation {c.ports}")


def _phase_aligned_deviation(a: np.ndarray, b: np.ndarray) -> float:
    # best global phase in the Frobenius sense, then max entrywise gap
    overlap = np.vdot(a, b)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a * phase - b)))


def verify_equivalence(
    circuit_kraus: Union[KrausPair, np.ndarray, list],
    abstract_kraus: Union[KrausPair, np.ndarray, list],
) -> float:
    """Max deviation between matching operators, each compared up to its own global phase."""

    def as_list(k):
        if isinstance(k, KrausPair):
            return [k.m_plus, k.m_minus]
        if isinstance(k, np.ndarray) and k.ndim == 2:
            return [k]
        return list(k)

    lhs, rhs = as_list(circuit_kraus), as_list(abstract_kraus)
    if len(lhs) != len(rhs):
        raise ValueError("operator lists differ in length")
    return max(_phase_aligned_deviation(np.asarray(a), np.asarray(b)) for a, b in zip(lhs, rhs))


def fig2_deviations(theta: float, phi: float, hwp3_offset: float = 0.0) -> dict[str, float]:
    """Compiled-vs-abstract deviations for the two-port box and both one-port selections."""
    ideal = kraus_pair(WeakMeasurement(theta, measurement_axis(phi)))
    out = {
        "fig2a": verify_equivalence(
            compile_to_kraus(build_fig2a_circuit(theta, phi, hwp3_offset=hwp3_offset)), ideal
        )
    }
    for sel, name in ((1, "fig2b_plus"), (-1, "fig2b_minus")):
        op = compile_to_kraus(build_fig2b_circuit(theta, phi, sel, hwp3_offset=hwp3_offset))
        out[name] = verify_equivalence(op, ideal[sel])
    return out


def unitarity_defect(c: Circuit) -> float:
    u = c.unitary()
    return float(np.max(np.abs(u.conj().T @ u - np.eye(4))))
