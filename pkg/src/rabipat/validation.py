"""Cross-check suites run by ``rabipat validate`` and the acceptance tests.

Every suite returns a list of :class:`Check` records carrying the observed
statistic, the tolerance and the comparison used, so the report can be
printed or serialized without re-running anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import phases
from .hilbert import HilbertConfig
from .models import (
    AnisotropicRabiParams,
    ParametricJCParams,
    build_anisotropic_rabi,
    build_dispersive,
    build_parametric_jc,
    build_squeezed_frame,
    squeeze_couplings,
    vacuum_shift,
)
from .patterns import decompose, pattern_matrix, reconstruction_residual
from .spectra import (
    Axis,
    CutoffPolicy,
    SweepSpec,
    converge_cutoff,
    diagonalize,
    photon_numbers,
    run_sweep,
)

__all__ = [
    "Check",
    "REFERENCE_DELTA_Q",
    "LAB_POLICY",
    "reconstruction_suite",
    "negative_control_suite",
    "attribution_suite",
    "select_coupling_convention",
    "unitary_equivalence_suite",
    "branch_consistency_suite",
    "dispersive_suite",
    "ed_analytic_suite",
    "SUITES",
    "run_suites",
]

# dq = 200 dc sech(2 sqrt 2), the classical-oscillator ratio at r = sqrt 2
REFERENCE_DELTA_Q = 200.0 / math.cosh(2.0 * math.sqrt(2.0))

# The lab frame carries the squeezing in its photon distribution (hundreds of
# photons at r = sqrt 2 beyond g0), so it needs a far larger cutoff ceiling.
LAB_POLICY = CutoffPolicy(N_start=64, N_max=3072)
SQUEEZED_POLICY = CutoffPolicy(N_start=32, N_max=1024)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    observed: float
    tolerance: float
    relation: str = "<"  # passed iff observed <relation> tolerance
    ledger: str = ""

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.observed):
            return False
        if self.relation == "<":
            return self.observed < self.tolerance
        return self.observed > self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f" [ledger: {self.ledger}]" if self.ledger else ""
        return f"{status} {self.suite}/{self.name}: {self.observed:.3e} {self.relation} {self.tolerance:.3e}{tail}"


def _random_draws(rng: np.random.Generator, draws: int):
    out = []
    for _ in range(draws):
        Omega = float(rng.choice([10.0, 100.0]))
        root = math.sqrt(Omega)
        xi1, xi2 = rng.uniform(0.0, root, size=2)
        out.append(AnisotropicRabiParams(1.0, Omega, float(xi1), float(xi2)))
    return out


def _max_reconstruction(params, fock_cutoff: int, assembly: str):
    cfg = HilbertConfig(fock_cutoff)
    worst_rel, worst_abs = 0.0, 0.0
    for p in params:
        h = build_anisotropic_rabi(p, cfg)
        _, residual, _ = reconstruction_residual(decompose(pattern_matrix(p), assembly), h, cfg)
        worst_abs = max(worst_abs, residual)
        worst_rel = max(worst_rel, residual / h.max_abs())
    return worst_rel, worst_abs


def reconstruction_suite(rng=None, draws: int = 100, fock_cutoff: int = 40, assembly: str = "consistent"):
    """``sum lambda_n A_n'A_n - H - c I`` off the truncation edge, relative to ``max|H|``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    rel, _ = _max_reconstruction(_random_draws(rng, draws), fock_cutoff, assembly)
    return [Check("reconstruction", f"{assembly} assembly, {draws} draws, N={fock_cutoff}", rel, 1e-10,
                  ledger="pattern-assembly")]


def negative_control_suite(rng=None, draws: int = 100, fock_cutoff: int = 40):
    """The ``(i sy, sz, a)`` assembly must miss the Hamiltonian by more than ``w0``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    _, worst = _max_reconstruction(_random_draws(rng, draws), fock_cutoff, "literal")
    return [Check("negative-control", "literal assembly residual (units of w0)", worst, 1.0, ">",
                  ledger="pattern-assembly")]


def reference_sweep(num: int = 151, levels: int = 4, observables=("patterns",), **kw) -> SweepSpec:
    base = AnisotropicRabiParams(1.0, 100.0, 0.1, 0.0)
    return SweepSpec(
        model="anisotropic",
        base=base,
        axes=(Axis("k_over_kc", 0.0, 1.5, num),),
        observables=frozenset({"levels", "photons", *observables}),
        levels=levels,
        **kw,
    )


def attribution_errors(rows, levels: int = 4):
    """Worst normalized energy and photon attribution errors over sweep rows."""
    e_err, n_err = 0.0, 0.0
    for row in rows:
        for i in range(levels):
            E, n = row[f"E{i}"], row[f"n{i}"]
            e_err = max(e_err, abs(row[f"E{i}_pattern_sum"] - (E + row["c"])) / (abs(E) + 1.0))
            n_sum = sum(row[f"n{i}_lambda{k}"] for k in (1, 2, 3))
            n_err = max(n_err, abs(n_sum - n) / (n + 1.0))
    return e_err, n_err


def attribution_suite(num: int = 151, threads: int = 1):
    rows = run_sweep(reference_sweep(num, threads=threads))
    e_err, n_err = attribution_errors(rows)
    swaps = sum(r["label_perm"] != "012" or r["label_ambiguous"] for r in rows)
    unconverged = sum(not r["converged"] for r in rows)
    return [
        Check("attribution", "energy sum vs E_i + c", e_err, 1e-9),
        Check("attribution", "photon sum vs <a'a>_i", n_err, 1e-10),
        Check("attribution", "label swaps or ambiguities", float(swaps), 0.5),
        Check("attribution", "unconverged sweep points", float(unconverged), 0.5),
    ]


def _converged(builder, p, policy, **kw):
    return converge_cutoff(builder, p, policy, 4, **kw)


def select_coupling_convention(p: ParametricJCParams | None = None, tol: float = 1e-6) -> str:
    """Pick the ``(g1, g2)`` convention whose squeezed-frame spectrum matches the lab frame.

    Compares the lowest four levels at converged cutoffs, after adding the
    squeezing vacuum shift. Raises if not exactly one convention matches.
    """
    if p is None:
        p = ParametricJCParams.from_r(1.0, REFERENCE_DELTA_Q, 0.01, math.sqrt(2.0))
    lab = _converged(build_parametric_jc, p, LAB_POLICY)
    matches = []
    for conv in ("r", "2r"):
        sq = _converged(build_squeezed_frame, p, SQUEEZED_POLICY, convention=conv)
        err = np.max(np.abs(lab.eigenvalues - sq.eigenvalues - vacuum_shift(p)))
        if err < tol * p.delta_c:
            matches.append(conv)
    if len(matches) != 1:
        raise RuntimeError(f"cross-spectrum check is inconclusive: matching conventions {matches}")
    return matches[0]


UNITARY_GRID = tuple((r, x) for r in (0.0, 0.5, math.sqrt(2.0)) for x in (0.5, 0.9, 1.2))


def unitary_gap(r: float, x: float, delta_q: float = REFERENCE_DELTA_Q):
    """``(max |E_lab - E_sq - shift| / dc, both converged)`` for the lowest four levels."""
    p0 = ParametricJCParams.from_r(1.0, delta_q, 0.0, r)
    p = p0.with_g(x * phases.g_critical(p0))
    lab = _converged(build_parametric_jc, p, LAB_POLICY)
    sq = _converged(build_squeezed_frame, p, SQUEEZED_POLICY)
    err = float(np.max(np.abs(lab.eigenvalues - sq.eigenvalues - vacuum_shift(p)))) / p.delta_c
    return err, bool(lab.converged and sq.converged)


def unitary_equivalence_suite(grid=UNITARY_GRID):
    checks = []
    try:
        conv = select_coupling_convention()
        checks.append(Check("unitary-equivalence", f"selected coupling convention '{conv}'",
                            0.0 if conv == "r" else 1.0, 0.5, ledger="squeeze-couplings"))
    except RuntimeError:
        checks.append(Check("unitary-equivalence", "coupling convention selection", math.inf, 0.5,
                            ledger="squeeze-couplings"))
    for r, x in grid:
        err, ok = unitary_gap(r, x)
        checks.append(Check("unitary-equivalence", f"r={r:.4g}, g/g0={x:g}",
                            err if ok else math.inf, 1e-6, ledger="squeeze-vacuum-shift"))
    return checks


def _branch_sets():
    driven = ParametricJCParams.from_r(1.0, REFERENCE_DELTA_Q, 0.1, math.sqrt(2.0))
    return (
        ("driven r=sqrt2", driven, driven.delta_c),
        ("driven r=0.5", driven.with_r(0.5), driven.delta_c),
        ("generic k=1", AnisotropicRabiParams(1.0, 200.0, 1.0, 1.0), 1.0),
        ("generic k=0.5", AnisotropicRabiParams(1.0, 100.0, 1.0, 0.5), 1.0),
    )


def branch_consistency_suite():
    """Excitation energies vanish monotonically at the transition; ``E_G`` is continuous."""
    checks = []
    left = np.linspace(0.9, 1.0, 101)[:-1]
    right = np.linspace(1.0, 1.1, 101)[1:]
    for label, p, scale in _branch_sets():
        eps_l = np.array([phases.normal_phase(phases.at_coupling(p, x)).eps_np for x in left])
        eps_r = np.array([phases.superradiant_phase(phases.at_coupling(p, x)).eps_sp for x in right])
        # count of non-monotone steps: decreasing towards 1 from each side
        bad = int(np.sum(np.diff(eps_l) >= 0) + np.sum(np.diff(eps_r) <= 0))
        checks.append(Check("branch-consistency", f"{label}: non-monotone steps", float(bad), 0.5))
        lim_l = phases.normal_phase(phases.at_coupling(p, 1 - 1e-9)).eps_np
        lim_r = phases.superradiant_phase(phases.at_coupling(p, 1 + 1e-9)).eps_sp
        checks.append(Check("branch-consistency", f"{label}: eps at 1 -/+ 1e-9",
                            max(lim_l, lim_r) / scale, 1e-3, ledger="eps-np-denominator"))
        e_np, e_sp = phases.branch_limits(p)
        checks.append(Check("branch-consistency", f"{label}: E_G jump at 1",
                            abs(e_np - e_sp) / scale, 1e-8, ledger="driven-sp-mean-field"))
    return checks


def dispersive_block_residual(p: ParametricJCParams, fock_cutoff: int = 30) -> float:
    """Spin-down block of ``H_I`` minus the normal-phase quadratic, max elementwise."""
    cfg = HilbertConfig(fock_cutoff)
    h = build_dispersive(p, cfg).data.real
    n = cfg.n_fock
    block = h[n:, n:]
    A, B, C = phases.normal_quadratic(p)
    m = np.arange(n, dtype=np.float64)
    ref = np.diag(A * m + C)
    off = -B * np.sqrt(m[2:] * m[1:-1])
    ref += np.diag(off, 2) + np.diag(off, -2)
    return float(np.max(np.abs(block - ref)))


def dispersive_shift(p: ParametricJCParams, ordering: str, fock_cutoff: int = 60):
    """``(|E0(H_I) - E0(H_AR)|, perturbative scale (g1^2 + g2^2) w / dq^2)``."""
    cfg = HilbertConfig(fock_cutoff)
    e_ar = diagonalize(build_squeezed_frame(p, cfg), 1).eigenvalues[0]
    e_i = diagonalize(build_dispersive(p, cfg, ordering), 1).eigenvalues[0]
    g1, g2 = squeeze_couplings(p)
    return abs(e_i - e_ar), (g1**2 + g2**2) * p.omega_eff / p.delta_q**2


def dispersive_suite():
    checks = []
    for label, p, _ in _branch_sets()[:2]:
        q = p.with_g(0.2 * phases.g_critical(p))
        checks.append(Check("dispersive", f"{label}: spin-down block vs H_np",
                            dispersive_block_residual(q), 1e-12, ledger="driven-np-offset"))
        err, scale = dispersive_shift(q, "minus_plus")
        checks.append(Check("dispersive", f"{label}: ground shift / scale, s- s+", err / scale, 1.0,
                            ledger="dispersive-ordering"))
        err, scale = dispersive_shift(q, "plus_minus")
        checks.append(Check("dispersive", f"{label}: ground shift / scale, s+ s- (must exceed)",
                            err / scale, 1.0, ">", ledger="dispersive-ordering"))
    return checks


def order_parameter(ratio: float = 200.0, k: float = 1.0, x: float = 1.2):
    """``(alpha0^2, ED <a'a> of the ground state, converged)`` at ``W/w0 = ratio``."""
    p = phases.at_coupling(AnisotropicRabiParams(1.0, ratio, 1.0, k), x)
    alpha2 = phases.superradiant_phase(p).N_c
    # parity eigenstates of a doublet share <a'a> to within the doublet splitting
    res = converge_cutoff(build_anisotropic_rabi, p, CutoffPolicy(N_max=1024), 2)
    return alpha2, float(photon_numbers(res)[0]), bool(res.converged)


ED_COUPLINGS = (0.2, 0.4, 0.6, 0.8, 0.9, 1.1, 1.2, 1.3, 1.4)


def ed_ground_energy_error(x: float, ratio: float = 200.0, k: float = 1.0):
    p = phases.at_coupling(AnisotropicRabiParams(1.0, ratio, 1.0, k), x)
    e_an = phases.ground_energy(p)
    res = converge_cutoff(build_anisotropic_rabi, p, CutoffPolicy(N_max=1024), 2)
    return abs(e_an - res.eigenvalues[0]) / abs(e_an), bool(res.converged)


def ed_analytic_suite():
    alpha2, n_ed, ok = order_parameter()
    checks = [Check("ed-analytic", "alpha0^2 vs ED <a'a> at W/w0=200, k=1, x=1.2",
                    abs(alpha2 - n_ed) / n_ed if ok else math.inf, 0.1)]
    worst = 0.0
    for x in ED_COUPLINGS:
        err, ok = ed_ground_energy_error(x)
        worst = max(worst, err if ok else math.inf)
    checks.append(Check("ed-analytic", "E_G vs ED ground energy, relative", worst, 0.01,
                        ledger="E-np-constant"))
    return checks


SUITES = {
    "reconstruction": reconstruction_suite,
    "negative-control": negative_control_suite,
    "attribution": attribution_suite,
    "unitary-equivalence": unitary_equivalence_suite,
    "branch-consistency": branch_consistency_suite,
    "dispersive": dispersive_suite,
    "ed-analytic": ed_analytic_suite,
}


def run_suites(names=None, seed: int = 0, draws: int = 100, assembly: str = "consistent", threads: int = 1):
    """Run the named suites (all by default) and return their checks in order."""
    names = list(SUITES) if names is None else list(names)
    checks = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        if name == "reconstruction":
            checks += reconstruction_suite(np.random.default_rng(seed), draws, assembly=assembly)
        elif name == "negative-control":
            checks += negative_control_suite(np.random.default_rng(seed), draws)
        elif name == "attribution":
            checks += attribution_suite(threads=threads)
        else:
            checks += SUITES[name]()
    return checks
