"""Exact diagonalization, cutoff convergence, finite differences and sweeps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg

from . import models
from .hilbert import HilbertConfig, OperatorMatrix
from .models import AnisotropicRabiParams, ParametricJCParams
from .patterns import (
    attribute,
    decompose,
    pattern_matrix,
    reconstruction_residual,
    track_labels,
)

__all__ = [
    "SpectrumResult",
    "CutoffPolicy",
    "Axis",
    "SweepSpec",
    "diagonalize",
    "converge_cutoff",
    "second_derivative",
    "photon_numbers",
    "parity_values",
    "point_params",
    "param_columns",
    "run_sweep",
    "AXES",
    "OBSERVABLES",
]


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    cutoff_used: int | None = None
    converged: bool = True
    convergence_residual: float = 0.0

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def _parity_signs(dim: int) -> np.ndarray:
    signs = (-1.0) ** np.arange(dim // 2)
    return np.concatenate([signs, -signs])


def _eigh_lowest(data: np.ndarray, k: int):
    k = min(k, data.shape[0])
    return scipy.linalg.eigh(data, subset_by_index=[0, k - 1], driver="evr")


def diagonalize(
    h: OperatorMatrix, k_levels: int, *, parity_blocks: bool | None = None, herm_tol: float = 1e-12
) -> SpectrumResult:
    """Lowest ``k_levels`` eigenpairs of a dense Hermitian matrix, ascending.

    When ``h`` has no matrix elements between the two parity sectors of
    ``sz (-1)^(a'a)`` (checked exactly unless ``parity_blocks`` is given),
    each sector is diagonalized on its own and the results merged. The
    eigenvectors are then parity eigenstates even inside numerically
    degenerate doublets.
    """
    data = h.data
    scale = 1.0 + h.max_abs()
    if not h.hermitian and h.hermiticity_residual() > herm_tol * scale:
        raise ValueError(f"matrix is not Hermitian (residual {h.hermiticity_residual():.3e})")
    k = min(int(k_levels), h.dim)
    if k < 1:
        raise ValueError("k_levels must be >= 1")
    if not np.any(data.imag):
        data = data.real
    if h.dim % 2 == 0:
        even = _parity_signs(h.dim) > 0
        if parity_blocks is None:
            parity_blocks = not np.any(data[np.ix_(even, ~even)])
    else:
        parity_blocks = False
    if not parity_blocks:
        vals, vecs = _eigh_lowest(data, k)
        return SpectrumResult(eigenvalues=vals, eigenvectors=vecs)

    vals_all, vecs_all = [], []
    for mask in (even, ~even):
        idx = np.flatnonzero(mask)
        v, w = _eigh_lowest(data[np.ix_(idx, idx)], k)
        full = np.zeros((h.dim, len(v)), dtype=w.dtype)
        full[idx] = w
        vals_all.append(v)
        vecs_all.append(full)
    vals = np.concatenate(vals_all)
    vecs = np.concatenate(vecs_all, axis=1)
    order = np.argsort(vals, kind="stable")[:k]
    return SpectrumResult(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def photon_numbers(res: SpectrumResult) -> np.ndarray:
    """``<a^dag a>`` for each returned eigenvector."""
    n_f = res.eigenvectors.shape[0] // 2
    m = np.tile(np.arange(n_f, dtype=np.float64), 2)
    return m @ (np.abs(res.eigenvectors) ** 2)


def parity_values(res: SpectrumResult) -> np.ndarray:
    """``<sz (-1)^(a'a)>`` for each returned eigenvector."""
    return _parity_signs(res.eigenvectors.shape[0]) @ (np.abs(res.eigenvectors) ** 2)


@dataclass(frozen=True)
class CutoffPolicy:
    tol_E: float = 1e-8
    tol_n: float = 1e-6
    N_start: int = 32
    N_max: int = 512
    growth: int = 2

    def __post_init__(self):
        if self.N_start < 1 or self.N_max < self.N_start:
            raise ValueError("need 1 <= N_start <= N_max")
        if self.growth < 2:
            raise ValueError("growth factor must be >= 2")
        if self.tol_E <= 0 or self.tol_n <= 0:
            raise ValueError("tolerances must be positive")


def _energy_scale(p) -> float:
    if isinstance(p, AnisotropicRabiParams):
        return p.omega0
    return p.delta_c


def converge_cutoff(
    builder: Callable,
    p,
    policy: CutoffPolicy = CutoffPolicy(),
    k_levels: int = 4,
    **builder_kwargs,
) -> SpectrumResult:
    """Grow the Fock cutoff until the low spectrum stops moving.

    Stops when ``max_i |E_i(N) - E_i(growth*N)| < tol_E * scale`` over the
    returned levels and the ground-state photon number changes by less than
    ``tol_n * (1 + <n>)``. If ``N_max`` is reached first the last result is
    returned with ``converged=False``.
    """
    scale = _energy_scale(p)
    n_cut = policy.N_start
    prev = diagonalize(builder(p, HilbertConfig(n_cut), **builder_kwargs), k_levels)
    prev_n = photon_numbers(prev)[0]
    residual = math.inf
    while n_cut < policy.N_max:
        n_cut = min(n_cut * policy.growth, policy.N_max)
        cur = diagonalize(builder(p, HilbertConfig(n_cut), **builder_kwargs), k_levels)
        cur_n = photon_numbers(cur)[0]
        m = min(len(cur.eigenvalues), len(prev.eigenvalues))
        residual = float(np.max(np.abs(cur.eigenvalues[:m] - prev.eigenvalues[:m])))
        dn = abs(cur_n - prev_n)
        if residual < policy.tol_E * scale and dn < policy.tol_n * (1.0 + abs(cur_n)):
            return replace(cur, cutoff_used=n_cut, converged=True, convergence_residual=residual)
        prev, prev_n = cur, cur_n
    return replace(prev, cutoff_used=n_cut, converged=False, convergence_residual=residual)


def second_derivative(f: Callable[[float], float], x0: float, h: float = 1e-3, richardson: bool = False) -> float:
    """Central second difference ``(f(x+h) - 2 f(x) + f(x-h)) / h^2``.

    With ``richardson=True`` one extrapolation step combines steps ``h`` and
    ``h/2``, cancelling the ``O(h^2)`` error term.
    """
    if not h > 0:
        raise ValueError("step h must be positive")

    def d2(step):
        return (f(x0 + step) - 2.0 * f(x0) + f(x0 - step)) / step**2

    if not richardson:
        return d2(h)
    return (4.0 * d2(h / 2) - d2(h)) / 3.0


# -- sweeps -------------------------------------------------------------------

RECON_CHECK_CUTOFF = 64

AXES = ("k_over_kc", "xi1_over_xi1c", "g_over_g0", "g", "r")
OBSERVABLES = frozenset({"levels", "gap", "photons", "parity", "patterns", "d2"})
_ANISO_AXES = {"k_over_kc", "xi1_over_xi1c"}
_PJC_AXES = {"g_over_g0", "g", "r"}


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    num: int

    def __post_init__(self):
        if self.name not in AXES:
            raise ValueError(f"unknown axis {self.name!r}; choose from {AXES}")
        if not (np.isfinite(self.start) and np.isfinite(self.stop)):
            raise ValueError("axis range must be finite")
        if self.num < 1:
            raise ValueError("axis needs at least one point")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class SweepSpec:
    """A one- or two-axis grid over one model.

    ``base`` supplies the fixed parameters. Axis semantics:

    * ``k_over_kc``: anisotropic, ``xi2 = x k_c xi1`` with
      ``k_c = sqrt(w0 W)/xi1 - 1``;
    * ``xi1_over_xi1c``: anisotropic at fixed ``k = base.xi2/base.xi1``
      (or ``k`` below), ``xi1 = x sqrt(w0 W)/(1 + k)``;
    * ``r``: squeeze parameter (applied before the coupling axes);
    * ``g_over_g0``: ``g = x g0(r)``;  ``g``: bare coupling.
    """

    model: str
    base: AnisotropicRabiParams | ParametricJCParams
    axes: tuple
    observables: frozenset = frozenset({"levels", "gap", "photons"})
    levels: int = 4
    cutoff: CutoffPolicy = CutoffPolicy()
    fixed_cutoff: int | None = None
    h: float = 1e-3
    k: float | None = None
    threads: int = 1
    builder_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in models.BUILDERS:
            raise ValueError(f"unknown model {self.model!r}")
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= 2:
            raise ValueError("a sweep has one or two axes")
        names = [ax.name for ax in axes]
        if len(set(names)) != len(names):
            raise ValueError("sweep axes must be distinct")
        aniso = self.model == "anisotropic"
        if aniso != isinstance(self.base, AnisotropicRabiParams):
            raise ValueError(f"base parameters do not match model {self.model!r}")
        allowed = _ANISO_AXES if aniso else _PJC_AXES
        for name in names:
            if name not in allowed:
                raise ValueError(f"axis {name!r} not valid for model {self.model!r}")
        if "k_over_kc" in names and "xi1_over_xi1c" in names:
            raise ValueError("k_over_kc and xi1_over_xi1c cannot be combined")
        bad = set(self.observables) - OBSERVABLES
        if bad:
            raise ValueError(f"unknown observables {sorted(bad)}")
        if "patterns" in self.observables and not aniso:
            raise ValueError("pattern attribution is defined for the anisotropic model only")
        if self.levels < 2 and "gap" in self.observables:
            raise ValueError("gap needs at least two levels")
        if not self.h > 0:
            raise ValueError("h must be positive")


def point_params(spec: SweepSpec, coords: dict):
    """Physical parameters at one grid point (``coords`` maps axis -> value)."""
    p = spec.base
    if isinstance(p, AnisotropicRabiParams):
        root = math.sqrt(p.omega0 * p.Omega)
        if "k_over_kc" in coords:
            if p.xi1 <= 0:
                raise ValueError("k_over_kc axis needs xi1 > 0")
            k_c = root / p.xi1 - 1.0
            return replace(p, xi2=coords["k_over_kc"] * k_c * p.xi1)
        if "xi1_over_xi1c" in coords:
            k = spec.k if spec.k is not None else p.k
            xi1 = coords["xi1_over_xi1c"] * root / (1.0 + k)
            return replace(p, xi1=xi1, xi2=k * xi1)
        return p
    if "r" in coords:
        p = p.with_r(coords["r"])
    if "g" in coords:
        p = p.with_g(coords["g"])
    if "g_over_g0" in coords:
        g0 = math.sqrt(p.omega_eff * p.delta_q) / math.exp(p.r)
        p = p.with_g(coords["g_over_g0"] * g0)
    return p


def param_columns(p) -> dict:
    if isinstance(p, AnisotropicRabiParams):
        xi_c = (p.xi1 + p.xi2) / math.sqrt(p.omega0 * p.Omega)
        return {"omega0": p.omega0, "Omega": p.Omega, "xi1": p.xi1, "xi2": p.xi2, "xi_c": xi_c}
    g0 = math.sqrt(p.omega_eff * p.delta_q) / math.exp(p.r)
    return {
        "delta_c": p.delta_c,
        "delta_q": p.delta_q,
        "g": p.g,
        "r": p.r,
        "eta": p.eta,
        "g0": g0,
        "g_over_g0": p.g / g0,
    }


def _ed(spec: SweepSpec, p, n_cut: int | None):
    builder = models.BUILDERS[spec.model]
    if n_cut is not None:
        res = diagonalize(builder(p, HilbertConfig(n_cut), **spec.builder_kwargs), spec.levels)
        return replace(res, cutoff_used=n_cut)
    return converge_cutoff(builder, p, spec.cutoff, spec.levels, **spec.builder_kwargs)


def _attributions(d, res, n_states):
    return [attribute(d, res.eigenvectors[:, i]) for i in range(n_states)]


def _evaluate_point(spec: SweepSpec, coords: dict) -> dict:
    p = point_params(spec, coords)
    res = _ed(spec, p, spec.fixed_cutoff)
    out = {"params": p, "res": res}
    obs = spec.observables
    if "patterns" in obs:
        d = decompose(pattern_matrix(p))
        out["decomp"] = d
        out["attr"] = _attributions(d, res, spec.levels)
        n_cut = res.cutoff_used or res.eigenvectors.shape[0] // 2 - 1
        # the identity is algebraic, so a modest cutoff checks it as well as a large one
        cfg = HilbertConfig(min(n_cut, RECON_CHECK_CUTOFF))
        out["c"], out["recon_residual"], _ = reconstruction_residual(
            d, models.build_anisotropic_rabi(p, cfg), cfg
        )
    if "d2" in obs:
        primary = spec.axes[0].name
        side = {}
        for sign in (-1, +1):
            shifted = dict(coords)
            shifted[primary] = coords[primary] + sign * spec.h
            try:
                ps = point_params(spec, shifted)
            except ValueError:
                # stencil leaves the parameter domain (e.g. xi2 < 0 at k = 0)
                side = None
                break
            rs = _ed(spec, ps, res.cutoff_used)
            entry = {"E": rs.eigenvalues}
            if "patterns" in obs:
                ds = track_labels(out["decomp"], decompose(pattern_matrix(ps)))
                entry["attr"] = _attributions(ds, rs, spec.levels)
                entry["perm"] = ds.permutation
            side[sign] = entry
        out["side"] = side
    return out


def _grid(spec: SweepSpec):
    values = [ax.values for ax in spec.axes]
    names = [ax.name for ax in spec.axes]
    idx = np.ndindex(*[len(v) for v in values])
    return [
        {names[j]: float(values[j][i[j]]) for j in range(len(names))} for i in idx
    ], names


def _threads(n):
    if n is None or n < 1:
        n = int(os.environ.get("RABIPAT_THREADS", "1") or 1)
    return max(1, n)


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate every grid point and return one row dict per point.

    Row order is lexicographic in the grid indices (first axis slowest).
    Points may be evaluated concurrently; pattern labels are then tracked
    sequentially along the grid order, restarting at each new value of the
    second axis.
    """
    coords_list, names = _grid(spec)
    workers = _threads(spec.threads)
    if workers > 1 and len(coords_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _evaluate_point(spec, c), coords_list))
    else:
        results = [_evaluate_point(spec, c) for c in coords_list]

    # sequential label tracking along the primary axis
    n_primary = spec.axes[0].num
    if "patterns" in spec.observables:
        # primary axis is first, so for two axes consecutive points differ in the
        # second axis; walk each second-axis line separately
        n_second = spec.axes[1].num if len(spec.axes) == 2 else 1
        for j in range(n_second):
            prev = None
            for i in range(n_primary):
                out = results[i * n_second + j]
                raw = out["decomp"]
                tracked = raw if prev is None else track_labels(prev, raw)
                out["tracked"] = tracked
                prev = tracked

    rows = []
    for coords, out in zip(coords_list, results):
        rows.append(_row(spec, coords, out))
    return rows


def _row(spec: SweepSpec, coords: dict, out: dict) -> dict:
    res = out["res"]
    p = out["params"]
    row = {name: coords[name] for name in coords}
    if spec.model == "anisotropic" and spec.k is not None:
        row["k"] = spec.k
    for key, val in param_columns(p).items():
        row.setdefault(key, val)
    row["model"] = spec.model
    row["cutoff_used"] = res.cutoff_used
    row["converged"] = bool(res.converged)
    row["convergence_residual"] = res.convergence_residual
    obs = spec.observables
    n_lv = len(res.eigenvalues)
    if "levels" in obs:
        for i in range(n_lv):
            row[f"E{i}"] = float(res.eigenvalues[i])
    if "gap" in obs:
        row["gap"] = res.gap
    if "photons" in obs:
        nn = photon_numbers(res)
        for i in range(n_lv):
            row[f"n{i}"] = float(nn[i])
    if "parity" in obs:
        pv = parity_values(res)
        for i in range(n_lv):
            row[f"parity{i}"] = float(pv[i])
    if "patterns" in obs:
        tracked = out["tracked"]
        # tracked.permutation maps label -> raw index of this point's decomposition
        perm = list(tracked.permutation)
        row["label_perm"] = "".join(str(v) for v in perm)
        row["label_ambiguous"] = bool(tracked.ambiguous)
        for n in range(3):
            row[f"lambda{n + 1}"] = float(tracked.lambdas[n])
        row["c"] = out["c"]
        row["reconstruction_residual"] = out["recon_residual"]
        for i, at in enumerate(out["attr"]):
            row[f"E{i}"] = float(res.eigenvalues[i])
            row[f"n{i}"] = at.total_photons
            for n in range(3):
                row[f"E{i}_lambda{n + 1}"] = at.energies[perm[n]]
            for n in range(3):
                row[f"n{i}_lambda{n + 1}"] = at.photons[perm[n]]
            row[f"E{i}_pattern_sum"] = at.total_energy
            row[f"n{i}_pattern_sum"] = float(sum(at.photons))
    if "d2" in obs and out["side"] is None:
        for i in range(n_lv):
            row[f"d2E{i}"] = math.nan
        if "patterns" in obs:
            for i in range(len(out["attr"])):
                for n in range(3):
                    row[f"d2E{i}_lambda{n + 1}"] = math.nan
    elif "d2" in obs:
        h = spec.h
        side = out["side"]
        for i in range(n_lv):
            row[f"d2E{i}"] = (side[1]["E"][i] - 2.0 * res.eigenvalues[i] + side[-1]["E"][i]) / h**2
        if "patterns" in obs:
            perm = list(out["tracked"].permutation)
            for i, at in enumerate(out["attr"]):
                for n in range(3):
                    # side decompositions were tracked against this point's raw labels
                    plus = side[1]["attr"][i].energies
                    minus = side[-1]["attr"][i].energies
                    row[f"d2E{i}_lambda{n + 1}"] = (
                        plus[perm[n]] - 2.0 * at.energies[perm[n]] + minus[perm[n]]
                    ) / h**2
    return row
