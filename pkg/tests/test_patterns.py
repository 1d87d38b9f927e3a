import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cardano_symmetric3
from rabipat.hilbert import HilbertConfig
from rabipat.models import AnisotropicRabiParams, build_anisotropic_rabi
from rabipat.patterns import (
    PatternDecomposition,
    PatternMatrix,
    attribute,
    decompose,
    pattern_matrix,
    reconstruct,
    reconstruction_residual,
    track_labels,
)
from rabipat.spectra import Axis, SweepSpec, diagonalize, run_sweep

BASE = dict(omega0=1.0, Omega=100.0, xi1=0.1)


def test_pattern_matrix_entries():
    m = pattern_matrix(AnisotropicRabiParams(1.0, 100.0, 0.1, 0.09)).m
    expected = [[0, 25, -0.095], [25, 0, -0.005], [-0.095, -0.005, 1]]
    np.testing.assert_allclose(m, expected, atol=1e-15)
    assert np.trace(m) == 1.0


def test_isotropic_decouples_second_slot():
    m = pattern_matrix(AnisotropicRabiParams(1.0, 10.0, 0.4, 0.4)).m
    assert m[1, 2] == 0.0 and m[2, 1] == 0.0


def test_pattern_matrix_rejects_asymmetric():
    with pytest.raises(ValueError):
        PatternMatrix(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 1.0]]))
    with pytest.raises(ValueError):
        PatternMatrix(np.eye(2))


def test_decoupled_eigenvalues():
    d = decompose(pattern_matrix(AnisotropicRabiParams(1.0, 8.0, 0.0, 0.0)))
    np.testing.assert_allclose(np.sort(d.lambdas), [-2.0, 1.0, 2.0], atol=1e-15)


def test_eigenvalues_against_cardano():
    m = pattern_matrix(AnisotropicRabiParams(1.0, 100.0, 0.1, 0.1))
    np.testing.assert_allclose(decompose(m).lambdas, cardano_symmetric3(m.m), atol=1e-12)


@settings(max_examples=1000, deadline=None)
@given(
    st.sampled_from([10.0, 100.0]),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_orthonormality_random_draws(Omega, f1, f2):
    root = math.sqrt(Omega)
    d = decompose(pattern_matrix(AnisotropicRabiParams(1.0, Omega, f1 * root, f2 * root)))
    u = d.vectors
    assert np.max(np.abs(u @ u.T - np.eye(3))) < 1e-14
    assert abs(np.sum(u[:, 2] ** 2) - 1.0) < 1e-14
    # sign convention: largest-magnitude component positive
    for vec in u:
        assert vec[np.argmax(np.abs(vec))] > 0


def test_reconstruction_decoupled_exact():
    cfg = HilbertConfig(6)
    p = AnisotropicRabiParams(1.0, 8.0, 0.0, 0.0)
    d = decompose(pattern_matrix(p))
    c, residual, spread = reconstruction_residual(d, build_anisotropic_rabi(p, cfg), cfg)
    assert abs(c) < 1e-14 and residual < 1e-14 and spread < 1e-14


def test_reconstruction_reference_k_half():
    cfg = HilbertConfig(40)
    k_c = math.sqrt(100.0) / 0.1 - 1.0
    p = AnisotropicRabiParams(1.0, 100.0, 0.1, 0.5 * k_c * 0.1)
    h = build_anisotropic_rabi(p, cfg)
    c, residual, spread = reconstruction_residual(decompose(pattern_matrix(p)), h, cfg)
    assert residual < 1e-10 * h.max_abs()
    # the identity part is sum lambda_n (u_n1^2 + u_n2^2) = M11 + M22 = 0
    assert abs(c) < 1e-12
    assert spread < 1e-12


def test_identity_shift_oracle_is_trace_of_spin_block():
    p = AnisotropicRabiParams(1.0, 10.0, 1.2, 0.7)
    d = decompose(pattern_matrix(p))
    shift = float(np.sum(d.lambdas * (d.vectors[:, 0] ** 2 + d.vectors[:, 1] ** 2)))
    assert shift == pytest.approx(0.0, abs=1e-14)


def test_literal_assembly_fails_reconstruction():
    cfg = HilbertConfig(20)
    p = AnisotropicRabiParams(1.0, 10.0, 1.0, 0.5)
    h = build_anisotropic_rabi(p, cfg)
    _, residual, _ = reconstruction_residual(decompose(pattern_matrix(p), "literal"), h, cfg)
    assert residual > 1.0


def test_reconstruct_edge_differs_only_in_last_level():
    cfg = HilbertConfig(5)
    p = AnisotropicRabiParams(1.0, 10.0, 1.0, 0.5)
    diff = reconstruct(decompose(pattern_matrix(p)), cfg).data - build_anisotropic_rabi(p, cfg).data
    # sum lambda_n u_n3^2 a a' picks up the missing boson level at the edge only
    bad = np.argwhere(np.abs(diff) > 1e-12)
    edge = {cfg.index("up", 5), cfg.index("down", 5)}
    assert all(i in edge or j in edge for i, j in bad)


def _ground_state(p, n_cut=30, k=4):
    res = diagonalize(build_anisotropic_rabi(p, HilbertConfig(n_cut)), k)
    return res


def test_attribution_completeness_per_eigenstate():
    p = AnisotropicRabiParams(1.0, 10.0, 1.5, 0.8)
    res = _ground_state(p)
    d = decompose(pattern_matrix(p))
    for i in range(4):
        at = attribute(d, res.eigenvectors[:, i])
        E = res.eigenvalues[i]
        assert abs(sum(at.energies) - E) < 1e-9 * (abs(E) + 1)
        assert abs(sum(at.photons) - at.total_photons) < 1e-10 * (at.total_photons + 1)


def test_attribution_vacuum():
    p = AnisotropicRabiParams(1.0, 8.0, 0.0, 0.0)
    res = _ground_state(p, 5, 1)
    at = attribute(decompose(pattern_matrix(p)), res.eigenvectors[:, 0])
    assert at.photons == (0.0, 0.0, 0.0)
    assert sum(at.energies) == pytest.approx(-4.0, abs=1e-14)


def test_attribution_matches_dense_operators():
    cfg = HilbertConfig(12)
    p = AnisotropicRabiParams(1.0, 10.0, 1.1, 0.3)
    res = diagonalize(build_anisotropic_rabi(p, cfg), 2)
    for assembly in ("consistent", "literal"):
        d = decompose(pattern_matrix(p), assembly)
        psi = res.eigenvectors[:, 1]
        at = attribute(d, psi)
        dense = [lam * np.linalg.norm(op.data @ psi) ** 2 for lam, op in zip(d.lambdas, d.pattern_ops(cfg))]
        np.testing.assert_allclose(at.energies, dense, atol=1e-12)


def test_attribution_rejects_unnormalized():
    p = AnisotropicRabiParams(1.0, 8.0, 0.3, 0.1)
    state = np.zeros(12)
    state[0] = 2.0
    with pytest.raises(ValueError):
        attribute(decompose(pattern_matrix(p)), state)


def test_track_labels_identity():
    d = decompose(pattern_matrix(AnisotropicRabiParams(1.0, 10.0, 0.7, 0.3)))
    t = track_labels(d, d)
    assert t.permutation == (0, 1, 2)
    assert not t.ambiguous
    np.testing.assert_array_equal(t.lambdas, d.lambdas)


def test_track_labels_follow_eigenvectors_through_crossing():
    # diag(t, 1 - t, 0.3) with a tiny fixed mixing: the top two levels cross near t = 0.5
    def family(t):
        eps = 1e-7
        m = np.array([[t, eps, 0.0], [eps, 1.0 - t, 0.0], [0.0, 0.0, 0.3]])
        return PatternMatrix(m)

    ts = np.linspace(0.0, 1.0, 40)  # skips t = 0.5
    prev = decompose(family(ts[0]))
    first = prev
    for t in ts[1:]:
        prev = track_labels(prev, decompose(family(t)))
    # the pattern that started as the slot-1 dominated one is still slot-1 dominated
    start_label = int(np.argmax(np.abs(first.vectors[:, 0])))
    assert np.argmax(np.abs(prev.vectors[start_label])) == 0
    assert prev.lambdas[start_label] == pytest.approx(1.0, abs=1e-5)
    # magnitude order would have swapped the labels
    assert prev.permutation != (0, 1, 2)


def test_track_labels_flags_degenerate_ambiguity():
    d = PatternDecomposition(lambdas=np.array([0.0, 0.0, 1.0]), vectors=np.eye(3))
    rot = np.array([[1, 1, 0], [-1, 1, 0], [0, 0, math.sqrt(2)]]) / math.sqrt(2)
    other = PatternDecomposition(lambdas=np.array([0.0, 0.0, 1.0]), vectors=rot)
    assert track_labels(d, other).ambiguous


def test_unknown_assembly_rejected():
    with pytest.raises(ValueError):
        decompose(pattern_matrix(AnisotropicRabiParams(1.0, 8.0, 0.0, 0.0)), "other")


def test_reference_sweep_labels_continuous():
    spec = SweepSpec(
        model="anisotropic",
        base=AnisotropicRabiParams(**BASE, xi2=0.0),
        axes=(Axis("k_over_kc", 0.0, 1.5, 151),),
        observables=frozenset({"levels", "patterns"}),
        levels=1,
        fixed_cutoff=20,
    )
    rows = run_sweep(spec)
    assert all(r["label_perm"] == "012" and not r["label_ambiguous"] for r in rows)
    # Weyl: |d lambda / d xi2| <= ||dM/dxi2||_2 = 1/sqrt(2)
    xi2 = np.array([r["xi2"] for r in rows])
    lam = np.array([[r[f"lambda{n}"] for n in (1, 2, 3)] for r in rows])
    steps = np.abs(np.diff(lam, axis=0))
    assert np.all(steps <= np.diff(xi2)[:, None] / math.sqrt(2) + 1e-12)
