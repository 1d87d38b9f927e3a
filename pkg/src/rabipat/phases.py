"""Closed-form low-energy phase quantities in the classical-oscillator limit.

Both models are handled by one code path. A parameter set is reduced to an
anisotropic Rabi model ``(w, W, x1, x2)``: oscillator frequency, qubit
splitting, rotating and counter-rotating coupling. For the driven JC model
that is ``(dc sech 2r, dq, g cosh r, g sinh r)``. The dimensionless coupling
is ``x = (x1 + x2) / sqrt(w W)``; the transition sits at ``x = 1``.

Normal phase (``x < 1``), spin-down projection::

    H_np = (w - (x1^2 + x2^2)/W) a'a - (x1 x2/W)(a'^2 + a^2) - x2^2/W - W/2

Superradiant phase (``x > 1``): displace ``a -> a + alpha0``, rotate the
spin onto the mean-field axis (``cos theta = x^-2``), which maps the model
onto another anisotropic Rabi model with splitting ``W x^2`` and couplings
``x1' = ((x1 + x2) x^-2 + (x1 - x2))/2``, ``x2' = ((x1 + x2) x^-2 - (x1 - x2))/2``,
then project as above and add the mean-field energy ``-(W/4)(x^2 + x^-2)``.

A quadratic ``A a'a - B (a'^2 + a^2) + C`` has excitation energy
``sqrt(A^2 - 4 B^2)``, ground energy ``(eps - A)/2 + C`` and squeeze
parameter ``ln((A + 2B)/(A - 2B)) / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .models import AnisotropicRabiParams, ParametricJCParams, squeeze_couplings, vacuum_shift
from .spectra import second_derivative

__all__ = [
    "RegimeError",
    "PhasePoint",
    "EffectiveModel",
    "effective_model",
    "xi_critical",
    "g_critical",
    "dimensionless_coupling",
    "frame_shift",
    "at_coupling",
    "normal_quadratic",
    "normal_phase",
    "superradiant_phase",
    "mean_field_energy",
    "find_alpha0",
    "ground_energy",
    "ground_energy_offset",
    "branch_limits",
    "phase_point",
]


class RegimeError(ValueError):
    """Formula evaluated outside the phase it describes."""


@dataclass(frozen=True)
class EffectiveModel:
    omega: float
    Omega: float
    x1: float
    x2: float

    @property
    def coupling(self) -> float:
        return (self.x1 + self.x2) / math.sqrt(self.omega * self.Omega)


@dataclass(frozen=True)
class PhasePoint:
    regime: str
    coupling: float
    eps_np: float = math.nan
    eps_sp: float = math.nan
    E_G: float = math.nan
    d2E_G: float = math.nan
    N_c: float = 0.0
    r_np: float = math.nan
    r_sp: float = math.nan
    alpha0: float = 0.0
    spin_plus: tuple = (0.0, 1.0)  # (up, down) amplitudes of |down+>
    spin_minus: tuple = (0.0, 1.0)


def effective_model(p) -> EffectiveModel:
    if isinstance(p, AnisotropicRabiParams):
        return EffectiveModel(p.omega0, p.Omega, p.xi1, p.xi2)
    if isinstance(p, ParametricJCParams):
        g1, g2 = squeeze_couplings(p)
        return EffectiveModel(p.omega_eff, p.delta_q, g1, g2)
    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def xi_critical(p: AnisotropicRabiParams) -> float:
    """``(xi1 + xi2)/sqrt(w0 W)``."""
    return (p.xi1 + p.xi2) / math.sqrt(p.omega0 * p.Omega)


def g_critical(p: ParametricJCParams) -> float:
    """Critical bare coupling ``g0 = sqrt(dc sech(2r) dq) / e^r``."""
    return math.sqrt(p.omega_eff * p.delta_q) / math.exp(p.r)


def frame_shift(p) -> float:
    """Constant added to effective-model energies to land in the model's own frame.

    Zero for the generic model. For the driven model it is the squeezing
    vacuum shift, so ``E_G`` estimates the lab-frame ground energy.
    """
    return vacuum_shift(p) if isinstance(p, ParametricJCParams) else 0.0


def dimensionless_coupling(p) -> float:
    return effective_model(p).coupling


def at_coupling(p, x: float):
    """Copy of ``p`` rescaled so the dimensionless coupling equals ``x``.

    Generic parameters keep ``k = xi2/xi1`` and scale both couplings;
    driven-JC parameters set ``g = x g0``.
    """
    if x < 0:
        raise ValueError("coupling must be non-negative")
    if isinstance(p, ParametricJCParams):
        return p.with_g(x * g_critical(p))
    s = p.xi1 + p.xi2
    if s == 0:
        raise ValueError("cannot rescale zero couplings; set xi1 or xi2 first")
    scale = x * math.sqrt(p.omega0 * p.Omega) / s
    return AnisotropicRabiParams(p.omega0, p.Omega, p.xi1 * scale, p.xi2 * scale)


def _quadratic(A: float, B: float, C: float):
    lo, hi = A - 2.0 * B, A + 2.0 * B
    # clamp rounding noise at the phase boundary
    prod = max(lo * hi, 0.0) if lo > -1e-14 * abs(A) else lo * hi
    if prod < 0:
        raise RegimeError("quadratic form is unstable (A^2 < 4B^2)")
    eps = math.sqrt(prod)
    r = 0.25 * math.log(hi / lo) if lo > 0 and hi > 0 else math.inf
    return eps, 0.5 * (eps - A) + C, r


def _normal_abc(m: EffectiveModel):
    A = m.omega - (m.x1**2 + m.x2**2) / m.Omega
    B = m.x1 * m.x2 / m.Omega
    C = -(m.x2**2) / m.Omega - 0.5 * m.Omega
    return A, B, C


def _normal(m: EffectiveModel):
    return _quadratic(*_normal_abc(m))


def normal_quadratic(p):
    """``(A, B, C)`` of the spin-down projection ``A a'a - B (a'^2 + a^2) + C``.

    Effective-model frame, so no :func:`frame_shift` is included.
    """
    return _normal_abc(effective_model(p))


def _superradiant_abc(m: EffectiveModel):
    x = m.coupling
    inv2 = x**-2
    s, d = m.x1 + m.x2, m.x1 - m.x2
    W = m.Omega * x**2
    y1 = 0.5 * (s * inv2 + d)
    y2 = 0.5 * (s * inv2 - d)
    A = m.omega - (y1**2 + y2**2) / W
    B = y1 * y2 / W
    C = -(y2**2) / W + mean_field_energy(m)
    return A, B, C


def _superradiant(m: EffectiveModel):
    return _quadratic(*_superradiant_abc(m))


def mean_field_energy(m: EffectiveModel) -> float:
    """Semiclassical minimum ``-(W/4)(x^2 + x^-2)`` (superradiant side)."""
    x = m.coupling
    return -0.25 * m.Omega * (x**2 + x**-2)


def _semiclassical(m: EffectiveModel, alpha: float) -> float:
    # a -> alpha (real): lower eigenvalue of w alpha^2 + (W/2) sz + (x1 + x2) alpha sx
    return m.omega * alpha**2 - math.sqrt(0.25 * m.Omega**2 + ((m.x1 + m.x2) * alpha) ** 2)


def _semiclassical_slope(m: EffectiveModel, alpha: float) -> float:
    s2 = (m.x1 + m.x2) ** 2
    return 2.0 * m.omega * alpha - s2 * alpha / math.sqrt(0.25 * m.Omega**2 + s2 * alpha**2)


def find_alpha0(m: EffectiveModel, xatol: float = 1e-10) -> float:
    """Displacement minimizing the semiclassical energy on ``[0, 10 sqrt(W/w)]``.

    A bounded scalar minimization locates the minimum; comparing energies
    alone cannot resolve it below ``sqrt(eps)`` relative, so the result is
    polished to ``xatol`` by a root search on the analytic slope.
    """
    alpha_max = 10.0 * math.sqrt(m.Omega / m.omega)
    res = minimize_scalar(
        lambda a: _semiclassical(m, a),
        bounds=(0.0, alpha_max),
        method="bounded",
        options={"xatol": xatol, "maxiter": 500},
    )
    a = float(res.x)
    lo, hi = 0.5 * a, min(2.0 * a, alpha_max)
    if a > 0 and _semiclassical_slope(m, lo) < 0 < _semiclassical_slope(m, hi):
        a = brentq(lambda t: _semiclassical_slope(m, t), lo, hi, xtol=xatol, rtol=4 * np.finfo(float).eps)
    return float(a)


def normal_phase(p) -> PhasePoint:
    m = effective_model(p)
    x = m.coupling
    if x >= 1:
        raise RegimeError(f"normal-phase formulas need coupling < 1, got {x!r}")
    eps, e_g, r = _normal(m)
    return PhasePoint(regime="normal", coupling=x, eps_np=eps, E_G=e_g + frame_shift(p), r_np=r)


def superradiant_phase(p) -> PhasePoint:
    m = effective_model(p)
    x = m.coupling
    if x <= 1:
        raise RegimeError(f"superradiant-phase formulas need coupling > 1, got {x!r}")
    eps, e_g, r = _superradiant(m)
    alpha0 = find_alpha0(m)
    up = math.sqrt((1.0 - x**-2) / 2.0)
    down = math.sqrt((1.0 + x**-2) / 2.0)
    return PhasePoint(
        regime="superradiant",
        coupling=x,
        eps_sp=eps,
        E_G=e_g + frame_shift(p),
        r_sp=r,
        alpha0=alpha0,
        N_c=alpha0**2,
        spin_plus=(-up, down),
        spin_minus=(up, down),
    )


def ground_energy(p) -> float:
    """Effective ground-state energy on whichever side of the transition ``p`` is."""
    m = effective_model(p)
    if m.coupling <= 1:
        return _normal(m)[1] + frame_shift(p)
    return _superradiant(m)[1] + frame_shift(p)


def ground_energy_offset(p) -> float:
    """Bare spin-down energy ``-W/2`` (``-dq/2`` for the driven model)."""
    return -0.5 * effective_model(p).Omega


def branch_limits(p):
    """``(E_normal, E_superradiant)`` at coupling exactly 1, each from its own branch."""
    m = effective_model(at_coupling(p, 1.0))
    # force the scale to exactly 1 to avoid rounding in the rescaled couplings
    s = math.sqrt(m.omega * m.Omega) / (m.x1 + m.x2)
    m = EffectiveModel(m.omega, m.Omega, m.x1 * s, m.x2 * s)
    shift = frame_shift(p)
    # eps vanishes at the transition; using 0 directly avoids sqrt(rounding) ~ 1e-8
    A_np, _, C_np = _normal_abc(m)
    A_sp, _, C_sp = _superradiant_abc(m)
    return C_np - 0.5 * A_np + shift, C_sp - 0.5 * A_sp + shift


def phase_point(p, coupling: float | None = None, h: float = 1e-3) -> PhasePoint:
    """All phase quantities at one point, dispatched on the coupling.

    ``coupling`` rescales ``p`` first (see :func:`at_coupling`). ``d2E_G`` is
    the central second difference of :func:`ground_energy` in the
    dimensionless coupling with step ``h``. For the driven model ``E_G``
    includes :func:`frame_shift`, which is constant in the coupling.
    """
    if coupling is not None:
        p = at_coupling(p, coupling)
        # dispatch on the requested value; the rescaled one can miss 1 by an ulp
        x = float(coupling)
    else:
        x = dimensionless_coupling(p)
    if x < 1:
        pt = normal_phase(p)
    elif x > 1:
        pt = superradiant_phase(p)
    else:
        e_np, _ = branch_limits(p)
        pt = PhasePoint(regime="critical", coupling=1.0, eps_np=0.0, eps_sp=0.0, E_G=e_np)
    if x - h >= 0 and (isinstance(p, ParametricJCParams) or p.xi1 + p.xi2 > 0):
        d2 = second_derivative(lambda c: ground_energy(at_coupling(p, c)), x, h)
    else:
        d2 = math.nan
    return PhasePoint(**{**pt.__dict__, "d2E_G": d2})
