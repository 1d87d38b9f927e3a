"""Truncated Fock x spin operator algebra.

Basis ordering is spin-major, Fock-minor::

    |up,0>, |up,1>, ..., |up,N>, |down,0>, ..., |down,N>

so a state index is ``s * (N + 1) + m`` with ``s = 0`` for spin up and
``s = 1`` for spin down. Every operator is a Kronecker product
``spin_part (x) boson_part`` in that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

__all__ = [
    "HilbertConfig",
    "OperatorMatrix",
    "annihilation",
    "creation",
    "number",
    "identity",
    "spin_ops",
    "parity",
    "basis_state",
    "op_compose",
    "op_add",
    "op_scale",
    "op_adjoint",
    "expectation",
]


@dataclass(frozen=True)
class HilbertConfig:
    """Fock cutoff ``N`` (largest photon number kept)."""

    fock_cutoff: int

    def __post_init__(self):
        if isinstance(self.fock_cutoff, bool) or not isinstance(self.fock_cutoff, (int, np.integer)):
            raise TypeError("fock_cutoff must be an integer")
        if self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be >= 1, got {self.fock_cutoff}")

    @property
    def n_fock(self) -> int:
        return self.fock_cutoff + 1

    @property
    def dim(self) -> int:
        return 2 * (self.fock_cutoff + 1)

    def index(self, spin: str, m: int) -> int:
        """Basis index of ``|spin, m>``; spin is ``"up"`` or ``"down"``."""
        if spin not in ("up", "down"):
            raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
        if not 0 <= m <= self.fock_cutoff:
            raise ValueError(f"photon number {m} outside 0..{self.fock_cutoff}")
        return (0 if spin == "up" else 1) * self.n_fock + m


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Immutable dense complex matrix on the spin x boson space.

    ``hermitian`` is only set by constructors that assemble the matrix as a
    sum of exactly Hermitian pieces, so ``data == data.conj().T`` bit for bit.
    """

    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be square, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "OperatorMatrix":
        return op_adjoint(self)

    def __matmul__(self, other):
        return op_compose(self, other)

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1.0))

    def __neg__(self):
        return op_scale(self, -1.0)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return op_scale(self, scalar)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))


def _check_dims(a: OperatorMatrix, b: OperatorMatrix):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def op_compose(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _check_dims(a, b)
    return OperatorMatrix(a.data @ b.data)


def op_add(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _check_dims(a, b)
    return OperatorMatrix(a.data + b.data, hermitian=a.hermitian and b.hermitian)


def op_scale(a: OperatorMatrix, scalar) -> OperatorMatrix:
    real = np.isreal(scalar)
    return OperatorMatrix(a.data * scalar, hermitian=a.hermitian and bool(real))


def op_adjoint(a: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(a.data.conj().T, hermitian=a.hermitian)


def expectation(op: OperatorMatrix, state, *, atol: float = 1e-10) -> complex:
    """``<psi|op|psi>`` for a normalized state vector."""
    psi = np.asarray(state, dtype=np.complex128).ravel()
    if psi.shape[0] != op.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim} vs state {psi.shape[0]}")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state is not normalized (<psi|psi> = {norm!r})")
    return complex(np.vdot(psi, op.data @ psi))


# -- elementary operators ---------------------------------------------------

_UP_DOWN = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "+": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "-": np.array([[0, 0], [1, 0]], dtype=np.complex128),
}


def _boson_a(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=np.float64)), k=1).astype(np.complex128)


def _boson_a2(n_fock: int) -> np.ndarray:
    """``a^2`` with ``<m-2|a^2|m> = sqrt(m) sqrt(m-1)``, built without a matmul."""
    m = np.arange(2, n_fock, dtype=np.float64)
    return np.diag(np.sqrt(m) * np.sqrt(m - 1.0), k=2)


def annihilation(cfg: HilbertConfig) -> OperatorMatrix:
    """``a (x) 1_spin`` with ``<m-1|a|m> = sqrt(m)``."""
    return OperatorMatrix(np.kron(np.eye(2), _boson_a(cfg.n_fock)))


def creation(cfg: HilbertConfig) -> OperatorMatrix:
    return annihilation(cfg).dag()


def number(cfg: HilbertConfig) -> OperatorMatrix:
    """Photon number operator, built diagonally (exact at the cutoff)."""
    n = np.arange(cfg.n_fock, dtype=np.float64)
    return OperatorMatrix(np.kron(np.eye(2), np.diag(n)), hermitian=True)


def identity(cfg: HilbertConfig) -> OperatorMatrix:
    return OperatorMatrix(np.eye(cfg.dim), hermitian=True)


def spin_ops(cfg: HilbertConfig):
    """Return ``(sx, sy, sz, s_plus, s_minus)`` tensored with the boson identity."""
    eye = np.eye(cfg.n_fock)
    herm = {"x": True, "y": True, "z": True, "+": False, "-": False}
    return tuple(
        OperatorMatrix(np.kron(_UP_DOWN[key], eye), hermitian=herm[key])
        for key in ("x", "y", "z", "+", "-")
    )


def parity(cfg: HilbertConfig) -> OperatorMatrix:
    """Z2 parity ``sigma_z (-1)^(a^dag a)``."""
    signs = (-1.0) ** np.arange(cfg.n_fock)
    return OperatorMatrix(np.kron(_UP_DOWN["z"], np.diag(signs)), hermitian=True)


def basis_state(cfg: HilbertConfig, spin: str, m: int) -> np.ndarray:
    psi = np.zeros(cfg.dim, dtype=np.complex128)
    psi[cfg.index(spin, m)] = 1.0
    return psi
