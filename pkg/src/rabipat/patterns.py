"""Operator-space pattern decomposition of the anisotropic Rabi Hamiltonian.

The Hamiltonian is a quadratic form ``v^dag M v`` in the operator vector
``v = (sx, -i sy, a)`` with the real symmetric 3x3 matrix

    [[0,              W/4,            -(xi1 + xi2)/2],
     [W/4,            0,              (xi2 - xi1)/2 ],
     [-(xi1 + xi2)/2, (xi2 - xi1)/2,  w0            ]]

Diagonalizing ``M = sum_n lambda_n u_n u_n^T`` gives three pattern operators
``A_n = u_n . v`` with ``H = sum_n lambda_n A_n^dag A_n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertConfig, OperatorMatrix, annihilation, spin_ops
from .models import AnisotropicRabiParams

__all__ = [
    "PatternMatrix",
    "PatternDecomposition",
    "Attribution",
    "pattern_matrix",
    "decompose",
    "pattern_operators",
    "reconstruct",
    "reconstruction_residual",
    "attribute",
    "track_labels",
    "AMBIGUITY_TOL",
]

AMBIGUITY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PatternMatrix:
    m: np.ndarray

    def __post_init__(self):
        arr = np.array(self.m, dtype=np.float64, copy=True)
        if arr.shape != (3, 3):
            raise ValueError(f"pattern matrix must be 3x3, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise ValueError("pattern matrix must be exactly symmetric")
        arr.flags.writeable = False
        object.__setattr__(self, "m", arr)


@dataclass(frozen=True, eq=False)
class PatternDecomposition:
    """Eigenvalues ``lambdas[n]`` and eigenvectors ``vectors[n]`` (rows).

    ``permutation[n]`` is the raw (ascending) index that label ``n`` came
    from; ``ambiguous`` is set when continuity tracking could not separate
    two assignments.
    """

    lambdas: np.ndarray
    vectors: np.ndarray
    permutation: tuple = (0, 1, 2)
    ambiguous: bool = False
    assembly: str = "consistent"
    _ops_cache: dict = field(default_factory=dict, repr=False)

    def pattern_ops(self, cfg: HilbertConfig):
        key = cfg.fock_cutoff
        if key not in self._ops_cache:
            self._ops_cache[key] = pattern_operators(self, cfg)
        return self._ops_cache[key]

    @property
    def photon_weights(self) -> np.ndarray:
        """``u_{n,3}^2``; sums to one."""
        return self.vectors[:, 2] ** 2


@dataclass(frozen=True)
class Attribution:
    energies: tuple  # lambda_n <A_n^dag A_n>
    photons: tuple  # u_{n,3}^2 <a^dag a>
    total_energy: float  # <H>
    total_photons: float


def pattern_matrix(p: AnisotropicRabiParams) -> PatternMatrix:
    s = -(p.xi1 + p.xi2) / 2.0
    d = (p.xi2 - p.xi1) / 2.0
    q = p.Omega / 4.0
    return PatternMatrix(np.array([[0.0, q, s], [q, 0.0, d], [s, d, p.omega0]]))


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(vec)))
    return -vec if vec[i] < 0 else vec


def decompose(m: PatternMatrix, assembly: str = "consistent") -> PatternDecomposition:
    """Eigendecompose ``M``; labels start in ascending eigenvalue order.

    ``assembly="literal"`` builds pattern operators from ``(i sy, sz, a)``
    instead of ``(sx, -i sy, a)``. It does not reproduce the Hamiltonian and
    exists as a negative control.
    """
    if assembly not in ("consistent", "literal"):
        raise ValueError(f"unknown assembly {assembly!r}")
    lam, vecs = np.linalg.eigh(m.m)
    vectors = np.array([_fix_sign(vecs[:, n]) for n in range(3)])
    return PatternDecomposition(lambdas=lam, vectors=vectors, assembly=assembly)


def pattern_operators(d: PatternDecomposition, cfg: HilbertConfig):
    sx, sy, sz, _, _ = spin_ops(cfg)
    a = annihilation(cfg)
    if d.assembly == "consistent":
        slots = (sx.data, -1j * sy.data, a.data)
    else:
        slots = (1j * sy.data, sz.data, a.data)
    return tuple(
        OperatorMatrix(sum(u[i] * slots[i] for i in range(3))) for u in d.vectors
    )


def reconstruct(d: PatternDecomposition, cfg: HilbertConfig) -> OperatorMatrix:
    """``sum_n lambda_n A_n^dag A_n`` on the truncated basis."""
    total = np.zeros((cfg.dim, cfg.dim), dtype=np.complex128)
    for lam, op in zip(d.lambdas, d.pattern_ops(cfg)):
        total += lam * (op.data.conj().T @ op.data)
    return OperatorMatrix(total)


def _edge_mask(cfg: HilbertConfig) -> np.ndarray:
    keep = np.ones(cfg.dim, dtype=bool)
    keep[cfg.fock_cutoff] = False
    keep[cfg.dim - 1] = False
    return keep


def reconstruction_residual(d: PatternDecomposition, h: OperatorMatrix, cfg: HilbertConfig):
    """Return ``(c, residual, diag_spread)`` for ``reconstruct(d) - h = c I + R``.

    ``c`` is the mean diagonal of the difference off the truncation edge,
    ``residual`` is ``max |R|`` off the edge, and ``diag_spread`` is the
    spread of the diagonal difference (zero when the shift is a pure
    multiple of the identity).
    """
    diff = reconstruct(d, cfg).data - h.data
    keep = _edge_mask(cfg)
    sub = diff[np.ix_(keep, keep)]
    diag = np.real(np.diag(sub))
    c = float(np.mean(diag))
    residual = float(np.max(np.abs(sub - c * np.eye(sub.shape[0]))))
    return c, residual, float(np.ptp(diag))


def _slot_vectors(psi: np.ndarray, assembly: str):
    """The three slot operators applied to ``psi`` without forming matrices."""
    n_f = psi.shape[0] // 2
    up, down = psi[:n_f], psi[n_f:]
    a_psi = np.zeros_like(psi)
    root = np.sqrt(np.arange(1, n_f, dtype=np.float64))
    a_psi[: n_f - 1] = root * up[1:]
    a_psi[n_f : 2 * n_f - 1] = root * down[1:]
    if assembly == "consistent":
        # sx swaps the spin blocks; -i sy maps (up, down) -> (-down, up)
        return np.concatenate([down, up]), np.concatenate([-down, up]), a_psi
    # i sy maps (up, down) -> (down, -up); sz flips the sign of the down block
    return np.concatenate([down, -up]), np.concatenate([up, -down]), a_psi


def attribute(d: PatternDecomposition, state, *, atol: float = 1e-10) -> Attribution:
    """Per-pattern energy and photon-number shares of a normalized state."""
    psi = np.asarray(state, dtype=np.complex128).ravel()
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state is not normalized (<psi|psi> = {norm!r})")
    if psi.shape[0] < 4 or psi.shape[0] % 2:
        raise ValueError(f"state length {psi.shape[0]} is not 2(N+1)")
    slots = _slot_vectors(psi, d.assembly)
    energies = []
    for lam, u in zip(d.lambdas, d.vectors):
        phi = u[0] * slots[0] + u[1] * slots[1] + u[2] * slots[2]
        energies.append(float(lam * np.vdot(phi, phi).real))
    n_f = psi.shape[0] // 2
    m = np.tile(np.arange(n_f, dtype=np.float64), 2)
    n_tot = float(np.sum(m * np.abs(psi) ** 2))
    photons = tuple(float(w * n_tot) for w in d.photon_weights)
    return Attribution(tuple(energies), photons, float(sum(energies)), n_tot)


def track_labels(prev: PatternDecomposition, nxt: PatternDecomposition) -> PatternDecomposition:
    """Relabel ``nxt`` so each pattern continues the most-overlapping one in ``prev``."""
    overlap = np.abs(prev.vectors @ nxt.vectors.T)  # [prev label, next raw]
    scored = sorted(
        ((sum(overlap[n, perm[n]] for n in range(3)), perm) for perm in itertools.permutations(range(3))),
        key=lambda t: -t[0],
    )
    best_score, best = scored[0]
    ambiguous = best_score - scored[1][0] < AMBIGUITY_TOL
    vectors = np.array(nxt.vectors[list(best)])
    for n in range(3):
        if prev.vectors[n] @ vectors[n] < 0:
            vectors[n] = -vectors[n]
    base = nxt.permutation
    return PatternDecomposition(
        lambdas=np.array(nxt.lambdas[list(best)]),
        vectors=vectors,
        permutation=tuple(base[i] for i in best),
        ambiguous=ambiguous,
        assembly=nxt.assembly,
    )
