import json
from math import pi

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import pdist, squareform

from mdsspec.empirical import (
    DistanceMatrixSq,
    basis_invariance_check,
    cluster_eigenvalues,
    commutation_check,
    constant_harmonic,
    coordinate_harmonic,
    double_center,
    empirical_spectrum,
    harmonic_inner_product,
    match_spectra,
    mds_embed,
    near_zero_fraction,
    quadratic_harmonic,
    squared_distance_matrix,
    symmetric_eigendecomposition,
)
from mdsspec.errors import DomainError, InsufficientDataError, NumericError
from mdsspec.recon import embedded_distance_partial_sums
from mdsspec.spaces import Projective, SampleSet, Sphere, Torus, circle, grid_points, sample_uniform
from mdsspec.spectra import build_spectrum, projective_eigenvalue, sphere_eigenvalue


@pytest.fixture(scope="module")
def circle400():
    return empirical_spectrum(grid_points(circle(), 400))


@given(st.integers(2, 40), st.integers(0, 2**31))
def test_double_centering_kills_constants(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 10, (n, n))
    D = A + A.T
    np.fill_diagonal(D, 0)
    B = double_center(D)
    assert np.max(np.abs(B @ np.ones(n))) <= 1e-9 * n * np.max(np.abs(B))
    assert np.array_equal(B, B.T)


def test_eigenvalues_against_sympy_charpoly():
    M = sympy.Matrix(5, 5, lambda i, j: sympy.Rational((i + 1) * (j + 1) % 7, 1 + abs(i - j)))
    M = (M + M.T) / 2
    roots = sorted((complex(r).real for r in sympy.Poly(M.charpoly()).nroots(n=30)), reverse=True)
    emp = symmetric_eigendecomposition(np.array(M.tolist(), dtype=float))
    np.testing.assert_allclose(emp.eigenvalues, roots, atol=1e-12)
    V = emp.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-12)


def test_decomposition_checks():
    with pytest.raises(DomainError):
        symmetric_eigendecomposition(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        symmetric_eigendecomposition(np.ones((2, 3)))
    # a zero tolerance cannot be met by floating-point eigenpairs of a generic matrix
    A = np.random.default_rng(1).standard_normal((40, 40))
    with pytest.raises(NumericError):
        symmetric_eigendecomposition(A + A.T, tol=0.0)


def test_size_guard():
    big = SampleSet(circle(), np.linspace(0, 6, 5001)[:, None])
    with pytest.raises(DomainError):
        squared_distance_matrix(big)


def test_two_points_embed_exactly():
    d = 1.3
    D2 = np.array([[0, d * d], [d * d, 0]])
    emp = symmetric_eigendecomposition(double_center(D2))
    Y = mds_embed(emp, 1)
    assert abs(Y[0, 0] - Y[1, 0]) == pytest.approx(d, abs=1e-12)


@given(st.integers(0, 2**31))
def test_euclidean_points_are_recovered(seed):
    P = np.random.default_rng(seed).uniform(-5, 5, (3, 2))
    D2 = squareform(pdist(P)) ** 2
    emp = symmetric_eigendecomposition(double_center(D2))
    Y = mds_embed(emp, 2)
    np.testing.assert_allclose(pdist(Y), pdist(P), atol=1e-8)


def test_circle_grid_distances_are_translation_invariant(circle400):
    Y = mds_embed(circle400, 60)
    D = squareform(pdist(Y))
    rolled = np.array([np.roll(D[i], -i) for i in range(0, 400, 37)])
    assert np.max(rolled.max(axis=0) - rolled.min(axis=0)) <= 1e-6


def test_circle_grid_top6(circle400):
    rep = match_spectra(circle400, build_spectrum(circle(), 20), 6)
    assert [r.analytic_degree for r in rep.records] == [1, 2, 3]
    assert rep.max_slot_error() <= 0.01
    assert all(r.complete for r in rep.records)


def test_circle_convergence_rate(circle400):
    emp800 = empirical_spectrum(grid_points(circle(), 800))
    table = build_spectrum(circle(), 20)
    e4 = np.concatenate([r.rel_errors for r in match_spectra(circle400, table, 10).records])
    e8 = np.concatenate([r.rel_errors for r in match_spectra(emp800, table, 10).records])
    assert np.all(e8 <= 1.5 * 0.5 * e4)


def test_rp2_signature():
    emp = empirical_spectrum(sample_uniform(Projective(2), 1500, 0))
    rep = match_spectra(emp, build_spectrum(Projective(2), 20), 100)
    assert len(rep.positive()) >= 3 and len(rep.negative()) >= 3
    assert (emp.eigenvalues > 1e-8).sum() >= 3 and (emp.eigenvalues < -1e-8).sum() >= 3
    # cluster means through degree 12 sit within a few percent of the analytic values
    head = rep.records[:6]
    assert [r.analytic_degree for r in head] == [2, 4, 6, 8, 10, 12]
    assert all(r.complete and r.rel_error < 0.05 for r in head)


def test_torus_kernel_is_large():
    emp = empirical_spectrum(grid_points(Torus((2 * pi, 2 * pi)), 30))
    assert near_zero_fraction(emp) >= 0.5


def test_match_report_json(circle400):
    rep = match_spectra(circle400, build_spectrum(circle(), 20), 4)
    obj = json.loads(rep.to_json())
    m = obj["matches"][0]
    assert set(m) >= {"analytic_degree", "analytic_value", "multiplicity", "empirical_values", "rel_error"}
    assert obj["normalization"] == "per_sample"
    with pytest.raises(DomainError):
        match_spectra(symmetric_eigendecomposition(np.eye(3)), build_spectrum(circle(), 4), 2)
    with pytest.raises(InsufficientDataError):
        match_spectra(circle400, build_spectrum(circle(), 4), 401)


def test_determinism():
    a = empirical_spectrum(sample_uniform(Sphere(2), 200, 5))
    b = empirical_spectrum(sample_uniform(Sphere(2), 200, 5))
    assert a.to_csv() == b.to_csv()


def test_serialization_shapes(circle400):
    D = squared_distance_matrix(grid_points(circle(), 5))
    assert isinstance(D, DistanceMatrixSq)
    assert len(D.to_csv().splitlines()) == 5
    assert json.loads(D.to_json())["space"] == "T1"
    assert json.loads(circle400.to_json())["normalization"] == "per_sample"
    assert circle400.to_csv().splitlines()[0] == "index,eigenvalue,normalization"


def test_clusters(circle400):
    cl = cluster_eigenvalues(circle400.eigenvalues[:10])
    assert [len(c) for c in cl] == [2] * 5


def test_basis_invariance(circle400):
    for seed in range(3):
        assert basis_invariance_check(circle400, seed, "within") <= 1e-8
    assert basis_invariance_check(circle400, 0, "across") > 1e-3
    assert basis_invariance_check(circle400, 0, "identity") == 0.0
    with pytest.raises(DomainError):
        basis_invariance_check(symmetric_eigendecomposition(np.diag([3.0, 2.0, 1.0])), 0, "within")


def test_embedding_matches_pair_series(circle400):
    # truncate both sides at the positive degrees m <= 21 (eleven odd m, two columns each)
    Y = mds_embed(circle400, 22)
    theta = 2 * pi * np.arange(1, 200, 17) / 400
    emb = np.sum((Y[0] - Y[np.arange(1, 200, 17)]) ** 2, axis=1)
    series = [embedded_distance_partial_sums(circle(), np.cos(t), 21).at(21) for t in theta]
    np.testing.assert_allclose(emb, series, rtol=0.02)


def test_commutation_s2_degree_one():
    res = commutation_check(Sphere(2), coordinate_harmonic(Sphere(2), 0), mc_samples=200_000, seed=0)
    assert res.analytic == pytest.approx(sphere_eigenvalue(2, 1).value)
    assert res.consistent(3.0)


def test_commutation_rp2_degree_two():
    res = commutation_check(Projective(2), quadratic_harmonic(Projective(2), 0, 1), mc_samples=200_000, seed=2)
    assert res.analytic == pytest.approx(projective_eigenvalue(2, 2).value)
    assert res.consistent(3.0)


def test_commutation_constant_is_annihilated():
    res = commutation_check(Sphere(2), constant_harmonic(), mc_samples=20_000, seed=0)
    np.testing.assert_allclose(res.t_phi, 0.0, atol=1e-15)
    assert res.ratio == 0.0


def test_commutation_guards():
    with pytest.raises(DomainError):
        coordinate_harmonic(Projective(2), 0)
    with pytest.raises(DomainError):
        commutation_check(circle(), constant_harmonic())


def test_cross_degree_inner_product_vanishes():
    s2 = Sphere(2)
    est, se = harmonic_inner_product(s2, coordinate_harmonic(s2, 0), quadratic_harmonic(s2, 0, 1), 400_000, seed=3)
    assert abs(est) <= 4 * se
    same, se2 = harmonic_inner_product(s2, coordinate_harmonic(s2, 0), coordinate_harmonic(s2, 0), 400_000, seed=3)
    # <T x0, x0> = lambda_1 * ||x0||^2 = lambda_1 / 3
    assert abs(same - sphere_eigenvalue(2, 1).value / 3) <= 4 * se2
