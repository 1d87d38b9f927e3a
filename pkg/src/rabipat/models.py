"""Hamiltonian builders.

* anisotropic Rabi model
  ``H = w0 a'a + (W/2) sz - xi1 (a s+ + a' s-) - xi2 (a s- + a' s+)``
* parametrically driven Jaynes-Cummings model (frame at half the pump)
  ``H = dc a'a + (dq/2) sz - (eta/2)(a'^2 + a^2) + g (a' s- + a s+)``
* its squeezed-frame image, an anisotropic Rabi model with effective
  frequency ``dc sech 2r`` and couplings ``g1 = g cosh r``, ``g2 = g sinh r``
* the dispersive (spin-diagonal) effective Hamiltonian of that image

All builders assemble the matrix from exactly Hermitian pieces, so the
returned operators carry ``hermitian=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertConfig, OperatorMatrix, _boson_a, _boson_a2

__all__ = [
    "AnisotropicRabiParams",
    "ParametricJCParams",
    "COUPLING_CONVENTION",
    "squeeze_couplings",
    "vacuum_shift",
    "build_anisotropic_rabi",
    "build_parametric_jc",
    "build_squeezed_frame",
    "build_dispersive",
    "BUILDERS",
]

# Resolved by the lab-frame vs squeezed-frame cross-spectrum check
# (see rabipat.validation.select_coupling_convention).
COUPLING_CONVENTION = "r"


@dataclass(frozen=True)
class AnisotropicRabiParams:
    omega0: float
    Omega: float
    xi1: float
    xi2: float

    def __post_init__(self):
        for name in ("omega0", "Omega", "xi1", "xi2"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.omega0 <= 0 or self.Omega <= 0:
            raise ValueError("omega0 and Omega must be positive")
        if self.xi1 < 0 or self.xi2 < 0:
            raise ValueError("couplings xi1, xi2 must be non-negative")

    @property
    def k(self) -> float:
        if self.xi1 == 0:
            raise ZeroDivisionError("k = xi2/xi1 undefined for xi1 = 0")
        return self.xi2 / self.xi1


@dataclass(frozen=True)
class ParametricJCParams:
    """Detunings, bare coupling and pump; give exactly one of ``eta`` or ``r``.

    The missing one is filled in from ``tanh 2r = eta / delta_c``.
    """

    delta_c: float
    delta_q: float
    g: float
    eta: float | None = None
    r: float | None = None

    def __post_init__(self):
        if (self.eta is None) == (self.r is None):
            raise ValueError("give exactly one of eta or r")
        for name in ("delta_c", "delta_q", "g"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.delta_c <= 0 or self.delta_q <= 0:
            raise ValueError("delta_c and delta_q must be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.eta is not None:
            if not abs(self.eta) < self.delta_c:
                raise ValueError(f"|eta| must be < delta_c for a bounded spectrum, got {self.eta!r}")
            object.__setattr__(self, "r", 0.5 * math.atanh(self.eta / self.delta_c))
        else:
            if not np.isfinite(self.r):
                raise ValueError(f"r must be finite, got {self.r!r}")
            object.__setattr__(self, "eta", self.delta_c * math.tanh(2.0 * self.r))

    @classmethod
    def from_r(cls, delta_c, delta_q, g, r):
        return cls(delta_c=delta_c, delta_q=delta_q, g=g, r=r)

    def with_g(self, g: float) -> "ParametricJCParams":
        return ParametricJCParams(self.delta_c, self.delta_q, g, r=self.r)

    def with_r(self, r: float) -> "ParametricJCParams":
        return ParametricJCParams(self.delta_c, self.delta_q, self.g, r=r)

    @property
    def omega_eff(self) -> float:
        """Effective cavity frequency ``delta_c sech 2r`` in the squeezed frame."""
        return self.delta_c / math.cosh(2.0 * self.r)


def squeeze_couplings(p: ParametricJCParams, convention: str | None = None):
    """Rotating and counter-rotating couplings ``(g1, g2)`` after squeezing.

    ``convention="r"`` gives ``(g cosh r, g sinh r)``; ``"2r"`` gives the
    ``(g cosh 2r, g sinh 2r)`` alternative, kept only for the cross-check.
    """
    convention = convention or COUPLING_CONVENTION
    if convention == "r":
        return p.g * math.cosh(p.r), p.g * math.sinh(p.r)
    if convention == "2r":
        return p.g * math.cosh(2 * p.r), p.g * math.sinh(2 * p.r)
    raise ValueError(f"unknown coupling convention {convention!r}")


def vacuum_shift(p: ParametricJCParams) -> float:
    """Constant dropped by the squeezing transformation.

    ``spec(build_parametric_jc) = spec(build_squeezed_frame) + vacuum_shift``.
    """
    return 0.5 * (p.omega_eff - p.delta_c)


# -- assembly ---------------------------------------------------------------
# Matrices are filled block by block in the spin-major ordering: [up, up],
# [down, down] and the off-diagonal [up, down] block, whose transpose is copied
# into [down, up]. Diagonal blocks are built as X + X^T, so every result is
# bitwise symmetric without any post-hoc symmetrization.

def _boson(cfg: HilbertConfig):
    a = _boson_a(cfg.n_fock).real
    num = np.arange(cfg.n_fock, dtype=np.float64)
    return a, num


def _assemble(cfg: HilbertConfig, up_up, down_down, up_down) -> OperatorMatrix:
    n = cfg.n_fock
    h = np.zeros((cfg.dim, cfg.dim))
    h[:n, :n] = up_up
    h[n:, n:] = down_down
    h[:n, n:] = up_down
    h[n:, :n] = up_down.T
    return OperatorMatrix(h, hermitian=True)


def _diag_plus(num_coeff, num, const, pair_coeff=0.0, a2=None):
    """``num_coeff * a'a + const + pair_coeff * (a'^2 + a^2)`` on the boson space."""
    block = np.diag(num_coeff * num + const)
    if pair_coeff:
        pair = pair_coeff * a2
        block += pair + pair.T
    return block


def _rabi_matrix(omega, Omega, c_rot, c_counter, cfg):
    """``omega a'a + (Omega/2) sz + c_rot (a s+ + h.c.) + c_counter (a s- + h.c.)``."""
    a, num = _boson(cfg)
    # a s+ and a' s+ both live in the [up, down] block
    up_down = c_rot * a + c_counter * a.T
    return _assemble(
        cfg,
        _diag_plus(omega, num, 0.5 * Omega),
        _diag_plus(omega, num, -0.5 * Omega),
        up_down,
    )


def build_anisotropic_rabi(p: AnisotropicRabiParams, cfg: HilbertConfig) -> OperatorMatrix:
    return _rabi_matrix(p.omega0, p.Omega, -p.xi1, -p.xi2, cfg)


def build_parametric_jc(p: ParametricJCParams, cfg: HilbertConfig) -> OperatorMatrix:
    a, num = _boson(cfg)
    a2 = _boson_a2(cfg.n_fock)
    return _assemble(
        cfg,
        _diag_plus(p.delta_c, num, 0.5 * p.delta_q, -0.5 * p.eta, a2),
        _diag_plus(p.delta_c, num, -0.5 * p.delta_q, -0.5 * p.eta, a2),
        p.g * a,
    )


def build_squeezed_frame(
    p: ParametricJCParams, cfg: HilbertConfig, convention: str | None = None
) -> OperatorMatrix:
    g1, g2 = squeeze_couplings(p, convention)
    return _rabi_matrix(p.omega_eff, p.delta_q, g1, g2, cfg)


def build_dispersive(
    p: ParametricJCParams, cfg: HilbertConfig, ordering: str = "minus_plus"
) -> OperatorMatrix:
    """Spin-diagonal effective Hamiltonian of the squeezed-frame model.

    ``w a'a + ((g1^2 + g2^2)/dq) a'a sz + (g1^2/dq + dq/2) sz
    + (g1 g2/dq)(a'^2 + a^2) sz + ((g1^2 - g2^2)/dq) P`` where ``P`` is
    ``s- s+`` (projector on spin down, ``ordering="minus_plus"``) or
    ``s+ s-`` (spin up, ``ordering="plus_minus"``).
    """
    if ordering not in ("minus_plus", "plus_minus"):
        raise ValueError(f"unknown ordering {ordering!r}")
    g1, g2 = squeeze_couplings(p)
    dq = p.delta_q
    a, num = _boson(cfg)
    a2 = _boson_a2(cfg.n_fock)
    chi = (g1**2 + g2**2) / dq
    zeta = g1**2 / dq + 0.5 * dq
    pair = g1 * g2 / dq
    proj = (g1**2 - g2**2) / dq
    up_const = zeta + (proj if ordering == "plus_minus" else 0.0)
    down_const = -zeta + (proj if ordering == "minus_plus" else 0.0)
    return _assemble(
        cfg,
        _diag_plus(p.omega_eff + chi, num, up_const, pair, a2),
        _diag_plus(p.omega_eff - chi, num, down_const, -pair, a2),
        np.zeros((cfg.n_fock, cfg.n_fock)),
    )


BUILDERS = {
    "anisotropic": build_anisotropic_rabi,
    "parametric-jc": build_parametric_jc,
    "squeezed-frame": build_squeezed_frame,
    "dispersive": build_dispersive,
}
