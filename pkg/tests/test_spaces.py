from math import pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdsspec.errors import DomainError
from mdsspec.spaces import (
    Product,
    Projective,
    SampleSet,
    Sphere,
    Torus,
    canonicalize,
    circle,
    factor_cosines,
    format_space,
    geodesic_distance,
    grid_points,
    pairwise_squared_distances,
    parse_space,
    points_equal,
    sample_uniform,
    validate_points,
)

atom = st.one_of(
    st.builds(Sphere, st.integers(1, 9)),
    st.builds(Projective, st.integers(1, 9)),
    st.integers(1, 3).map(lambda m: Torus((2 * pi,) * m)),
    st.lists(st.floats(0.1, 20.0), min_size=1, max_size=3).map(lambda ls: Torus(tuple(ls))),
)
space = st.one_of(atom, st.lists(atom, min_size=2, max_size=4).map(lambda fs: Product(*fs)))


@given(space)
def test_grammar_round_trip(s):
    assert parse_space(format_space(s)) == s


@pytest.mark.parametrize(
    "text,expected",
    [
        ("S2", Sphere(2)),
        ("RP3", Projective(3)),
        ("T1", circle()),
        ("T2", Torus((2 * pi, 2 * pi))),
        ("S2 x RP3 x T1", Product(Sphere(2), Projective(3), circle())),
        ("  S2x  RP3 ", Product(Sphere(2), Projective(3))),
        ("S1xS1", Product(Sphere(1), Sphere(1))),
        ("T[3.0, 1.5] x S1", Product(Torus((3.0, 1.5)), Sphere(1))),
    ],
)
def test_parse_examples(text, expected):
    assert parse_space(text) == expected


@pytest.mark.parametrize("bad", ["", "S", "Q3", "S0", "RP0", "T0", "S2 x", "S2 y S3", "T[a]", "S-1"])
def test_parse_errors(bad):
    with pytest.raises(DomainError):
        parse_space(bad)


def test_product_flattens_and_needs_two():
    p = Product(Product(Sphere(1), Sphere(2)), Projective(2))
    assert p.factors == (Sphere(1), Sphere(2), Projective(2))
    with pytest.raises(DomainError):
        Product(Sphere(2))
    assert Torus((1.0, 2.0)).atoms() == (Torus((1.0,)), Torus((2.0,)))


def test_diameters():
    assert Sphere(3).diameter == pi
    assert Projective(3).diameter == pi / 2
    assert circle().diameter == pytest.approx(pi)
    assert Product(Sphere(2), Sphere(2)).diameter == pytest.approx(pi * np.sqrt(2))


def test_sphere_distance_examples():
    s = Sphere(2)
    e = np.eye(3)
    assert geodesic_distance(s, e[0], e[0]) == 0.0
    assert geodesic_distance(s, e[0], -e[0]) == pytest.approx(pi)
    assert geodesic_distance(s, e[0], e[1]) == pytest.approx(pi / 2)


def test_projective_distance_ignores_sign():
    rp = Projective(2)
    e = np.eye(3)
    assert geodesic_distance(rp, e[0], -e[0]) == pytest.approx(0.0, abs=1e-7)
    assert geodesic_distance(rp, e[0], e[1]) == pytest.approx(pi / 2)


def test_circle_distance_wraps():
    c = circle(10.0)
    assert geodesic_distance(c, np.array([0.5]), np.array([9.5])) == pytest.approx(1.0)
    assert factor_cosines(c, np.array([0.0]), np.array([2.5]))[0] == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 2**31), space)
def test_distance_metric_properties(seed, s):
    X = sample_uniform(s, 3, seed).points
    d01 = geodesic_distance(s, X[0], X[1])
    assert d01 == pytest.approx(geodesic_distance(s, X[1], X[0]), abs=1e-12)
    assert 0 <= d01 <= s.diameter + 1e-9
    d12 = geodesic_distance(s, X[1], X[2])
    d02 = geodesic_distance(s, X[0], X[2])
    assert d02 <= d01 + d12 + 1e-9


@given(st.integers(0, 2**31))
def test_product_is_pythagorean(seed):
    s = Product(Sphere(2), Projective(2), circle(3.0))
    X = sample_uniform(s, 2, seed).points
    parts = [geodesic_distance(a, X[0][sl], X[1][sl]) for a, sl in zip(s.atoms(), s.coord_slices())]
    assert geodesic_distance(s, X[0], X[1]) == pytest.approx(np.sqrt(sum(p * p for p in parts)))


@given(st.integers(0, 2**31), space)
def test_pairwise_matrix(seed, s):
    X = sample_uniform(s, 6, seed).points
    D = pairwise_squared_distances(s, X)
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    assert D[1, 4] == pytest.approx(geodesic_distance(s, X[1], X[4]) ** 2, abs=1e-10)


def test_sampling_deterministic_and_valid():
    s = Product(Sphere(3), Projective(2), Torus((1.0, 2.0)))
    a = sample_uniform(s, 50, 7)
    b = sample_uniform(s, 50, 7)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample_uniform(s, 50, 8).points)
    validate_points(s, a.points)
    with pytest.raises(ValueError):
        a.points[0, 0] = 1.0


def test_sampling_is_roughly_uniform():
    X = sample_uniform(Sphere(2), 20000, 1).points
    assert np.all(np.abs(X.mean(axis=0)) < 0.03)
    np.testing.assert_allclose((X**2).mean(axis=0), 1 / 3, atol=0.02)
    c = sample_uniform(circle(5.0), 20000, 1).points
    assert abs(c.mean() - 2.5) < 0.1


def test_projective_canonical_form():
    X = sample_uniform(Projective(3), 200, 3).points
    assert np.all(X[:, 0] > 0)
    flipped = canonicalize(Projective(3), -X)
    np.testing.assert_array_equal(flipped, X)


def test_points_equal():
    rp = Projective(2)
    x = np.array([0.6, 0.8, 0.0])
    assert points_equal(rp, x, -x)
    assert not points_equal(Sphere(2), x, -x)
    assert points_equal(circle(4.0), np.array([0.0]), np.array([4.0 - 1e-14]))


def test_validate_points_rejects():
    with pytest.raises(DomainError):
        validate_points(Sphere(2), np.array([[1.0, 1.0, 0.0]]))
    with pytest.raises(DomainError):
        validate_points(circle(1.0), np.array([[1.5]]))
    with pytest.raises(DomainError):
        sample_uniform(Sphere(2), 1, 0)


def test_sample_serialization_round_trip():
    s = Product(Sphere(2), circle(3.0))
    a = sample_uniform(s, 10, 11)
    b = SampleSet.from_csv(a.to_csv(), s)
    assert np.array_equal(a.points, b.points)
    c = SampleSet.from_json(a.to_json())
    assert c.space == s and np.array_equal(c.points, a.points) and c.seed == 11


def test_grid():
    g = grid_points(Torus((2 * pi, 2 * pi)), 5)
    assert g.points.shape == (25, 2)
    assert g.scheme == "grid"
    with pytest.raises(DomainError):
        grid_points(Sphere(2), 5)
