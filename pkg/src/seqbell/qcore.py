"""Dense qubit calculus for the sequential Bell scenario.

States live on at most three qubits (Alice, Bob, and a binary pointer), so
everything here is plain dense numpy. Basis convention: ``|0> = |H> = |up>``
is the +1 eigenstate of sigma_z, ``|1> = |V> = |down>``.

Bloch directions are stored as ``(z, x, y)`` triples because every setting
in the experiment lies in the z-x plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "TOL",
    "EQUIV_TOL",
    "MAX_DIM",
    "Ket",
    "DensityMatrix",
    "BlochDirection",
    "dm_from_ket",
    "tensor",
    "partial_trace",
    "observable_from_direction",
    "projector",
    "apply_kraus",
    "expectation",
    "singlet",
    "lift",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "IDENTITY",
]

TOL = 1e-10
EQUIV_TOL = 1e-12
MAX_DIM = 8

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")


@dataclass(frozen=True)
class Ket:
    """State vector. May be sub-normalized (a post-selected branch)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size == 0:
            raise ValueError("ket must have nonzero dimension")
        if amps.size > MAX_DIM:
            raise ValueError(f"dimension {amps.size} exceeds cap {MAX_DIM}")
        _check_finite(amps, "ket")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "Ket":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.amplitudes / n)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD matrix with unit trace, or an explicitly tagged sub-normalized one.

    Sub-normalized states (``subnormalized=True``) only need trace <= 1; they
    are never renormalized behind the caller's back.
    """

    matrix: np.ndarray
    subnormalized: bool = False
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] == 0:
            raise ValueError("density matrix must have nonzero dimension")
        if m.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {m.shape[0]} exceeds cap {MAX_DIM}")
        _check_finite(m, "density matrix")
        object.__setattr__(self, "matrix", m)
        if self.check:
            self._validate()

    def _validate(self) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=TOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if self.subnormalized:
            if tr > 1 + TOL:
                raise ValueError(f"sub-normalized state has trace {tr} > 1")
        elif abs(tr - 1) > TOL:
            raise ValueError(f"trace {tr} differs from 1")
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise ValueError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def normalized(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0:
            raise ValueError("cannot normalize a zero-trace state")
        return DensityMatrix(self.matrix / tr)


@dataclass(frozen=True)
class BlochDirection:
    """Unit vector on the Bloch sphere, components ordered (z, x, y)."""

    z: float
    x: float
    y: float = 0.0

    def __post_init__(self):
        n = np.sqrt(self.z**2 + self.x**2 + self.y**2)
        if not np.isfinite(n) or abs(n - 1) > TOL:
            raise ValueError(f"Bloch direction must be a unit vector, norm is {n}")

    @classmethod
    def from_angle(cls, beta: float) -> "BlochDirection":
        """Direction in the z-x plane at polar angle ``beta`` from +z (radians)."""
        return cls(float(np.cos(beta)), float(np.sin(beta)), 0.0)

    @classmethod
    def normalized(cls, z: float, x: float, y: float = 0.0) -> "BlochDirection":
        v = np.array([z, x, y], dtype=float)
        v = v / np.linalg.norm(v)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.z, self.x, self.y])

    def dot(self, other: "BlochDirection") -> float:
        return float(self.vector @ other.vector)

    def __neg__(self) -> "BlochDirection":
        return BlochDirection(-self.z, -self.x, -self.y)


MatrixLike = Union[DensityMatrix, np.ndarray]


def dm_from_ket(k: Ket) -> DensityMatrix:
    """Return ``|k><k|``; its trace equals ``<k|k>``."""
    v = k.amplitudes
    rho = np.outer(v, v.conj())
    sub = abs(k.norm**2 - 1) > TOL
    return DensityMatrix(rho, subnormalized=sub)


def tensor(a: MatrixLike, b: MatrixLike) -> MatrixLike:
    """Kronecker product. Two density matrices give a density matrix."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(
            np.kron(a.matrix, b.matrix),
            subnormalized=a.subnormalized or b.subnormalized,
        )
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a, dtype=complex)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b, dtype=complex)
    _check_finite(ma, "left factor")
    _check_finite(mb, "right factor")
    return np.kron(ma, mb)


def partial_trace(rho: DensityMatrix, keep: Sequence[int], dims: Sequence[int]) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    rho : DensityMatrix
        State on the composite space ``dims[0] x dims[1] x ...``.
    keep : sequence of int
        Indices of the subsystems to keep, in output order sorted ascending.
    dims : sequence of int
        Local dimensions; their product must equal ``rho.dim``.
    """
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != rho.dim:
        raise ValueError(f"dims {dims} inconsistent with state dimension {rho.dim}")
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    t = rho.matrix.reshape(dims + dims)
    # trace pairs from the highest index down so remaining axis numbers stay valid
    m = n
    for i in reversed(range(n)):
        if i in keep:
            continue
        t = np.trace(t, axis1=i, axis2=i + m)
        m -= 1
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return DensityMatrix(t.reshape(d, d), subnormalized=rho.subnormalized)


def observable_from_direction(n: BlochDirection) -> np.ndarray:
    """Spin observable ``sigma . n`` with eigenvalues +-1."""
    if not isinstance(n, BlochDirection):
        raise TypeError("expected a BlochDirection")
    return n.z * PAULI_Z + n.x * PAULI_X + n.y * PAULI_Y


def projector(n: BlochDirection, outcome: int) -> np.ndarray:
    """Projector onto the ``outcome`` (+1 or -1) eigenspace of ``sigma . n``."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    return 0.5 * (IDENTITY + outcome * observable_from_direction(n))


def apply_kraus(rho: DensityMatrix, M: np.ndarray) -> tuple[DensityMatrix, float]:
    """Apply one Kraus operator: returns ``(M rho M^dag, Tr(M rho M^dag))``.

    The returned state is tagged sub-normalized; it is not rescaled.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape[1] != rho.dim:
        raise ValueError(f"Kraus operator shape {M.shape} incompatible with dim {rho.dim}")
    out = M @ rho.matrix @ M.conj().T
    p = float(np.trace(out).real)
    limit = rho.trace if rho.subnormalized else 1.0
    if p > limit + TOL:
        raise ValueError(f"branch probability {p} exceeds 1: invalid instrument")
    return DensityMatrix(out, subnormalized=True), p


def expectation(rho: DensityMatrix, obs: np.ndarray) -> float:
    obs = np.asarray(obs, dtype=complex)
    if not np.allclose(obs, obs.conj().T, atol=TOL, rtol=0):
        raise ValueError("observable is not Hermitian")
    val = np.trace(rho.matrix @ obs)
    return float(val.real)


def singlet() -> DensityMatrix:
    """``(|HV> - |VH>)/sqrt(2)`` as a 4x4 density matrix."""
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return DensityMatrix(np.outer(psi, psi.conj()))


def lift(op: np.ndarray, index: int, n_qubits: int) -> np.ndarray:
    """Embed a single-qubit operator acting on qubit ``index`` of ``n_qubits``."""
    out = np.eye(1, dtype=complex)
    for q in range(n_qubits):
        out = np.kron(out, op if q == index else IDENTITY)
    return out
