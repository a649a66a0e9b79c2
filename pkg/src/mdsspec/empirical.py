"""Finite-sample classical MDS and its comparison with the analytic spectra."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ConvergenceError, DomainError, InsufficientDataError, NumericError
from .spaces import Projective, SampleSet, Sphere, factor_sq_distances, format_space, pairwise_squared_distances, sample_uniform
from .spectra import projective_eigenvalue, sphere_eigenvalue

MAX_POINTS = 5000


def _guard_size(n):
    if n > MAX_POINTS:
        raise DomainError(f"{n} points exceeds the desk-scale limit of {MAX_POINTS}")


@dataclass(frozen=True, eq=False)
class DistanceMatrixSq:
    values: np.ndarray
    sample: SampleSet | None = None

    @property
    def n_points(self):
        return len(self.values)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.values:
            w.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(
            {
                "space": format_space(self.sample.space) if self.sample is not None else None,
                "n_points": self.n_points,
                "values": self.values.tolist(),
            }
        )


def squared_distance_matrix(sample):
    """Dense matrix of squared geodesic distances of a sample."""
    n = len(sample)
    if n < 2:
        raise DomainError("need at least 2 points")
    _guard_size(n)
    D = pairwise_squared_distances(sample.space, sample.points)
    D.setflags(write=False)
    return DistanceMatrixSq(D, sample)


def double_center(D2):
    """``B = -J D2 J / 2`` with ``J = I - 11^T / N``."""
    D = D2.values if isinstance(D2, DistanceMatrixSq) else np.asarray(D2, dtype=float)
    row = D.mean(axis=1)
    B = -0.5 * (D - row[:, None] - row[None, :] + row.mean())
    return 0.5 * (B + B.T)


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Eigenpairs of a centered Gram matrix, eigenvalues descending.

    ``normalization`` is ``"raw"`` (eigenvalues of ``B``) or
    ``"per_sample"`` (divided by ``N``, the operator scale for the
    empirical probability measure). Eigenvectors are unit vectors in
    ``R^N`` under both.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_points: int
    normalization: str = "raw"

    def per_sample(self):
        if self.normalization == "per_sample":
            return self
        return EmpiricalSpectrum(self.eigenvalues / self.n_points, self.eigenvectors, self.n_points, "per_sample")

    @property
    def raw_eigenvalues(self):
        if self.normalization == "raw":
            return self.eigenvalues
        return self.eigenvalues * self.n_points

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "normalization"])
        for i, v in enumerate(self.eigenvalues):
            w.writerow([i, format(v, ".17g"), self.normalization])
        return buf.getvalue()

    def to_json(self, include_vectors=False):
        obj = {
            "n_points": self.n_points,
            "normalization": self.normalization,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }
        if include_vectors:
            obj["eigenvectors"] = self.eigenvectors.tolist()
        return json.dumps(obj)


def symmetric_eigendecomposition(B, tol=1e-8):
    """Full eigensystem of a symmetric matrix via LAPACK, with checked residuals."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DomainError("expected a square matrix")
    _guard_size(len(B))
    scale = max(np.max(np.abs(B)), np.finfo(float).tiny)
    if np.max(np.abs(B - B.T)) > 1e-9 * scale:
        raise DomainError("matrix is not symmetric")
    try:
        w, V = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    norm = max(np.max(np.abs(w)), np.finfo(float).tiny)
    resid = np.linalg.norm(B @ V - V * w, axis=0)
    if np.max(resid) > tol * norm:
        raise NumericError(f"eigenpair residual {np.max(resid):.3e} exceeds {tol:g} * ||B||")
    gram = V.T @ V
    if np.max(np.abs(gram - np.eye(len(B)))) > 1e-8:
        raise NumericError("eigenvectors are not orthonormal to 1e-8")
    return EmpiricalSpectrum(w, V, len(B), "raw")


def empirical_spectrum(sample):
    """Sample -> squared distances -> centering -> per-sample spectrum."""
    B = double_center(squared_distance_matrix(sample))
    return symmetric_eigendecomposition(B).per_sample()


# -- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class MatchRecord:
    analytic_degree: int
    analytic_value: float
    multiplicity: int
    empirical_values: tuple
    factor: str = ""

    @property
    def rel_errors(self):
        v = np.asarray(self.empirical_values)
        return np.abs(v - self.analytic_value) / abs(self.analytic_value)

    @property
    def rel_error(self):
        return float(abs(np.mean(self.empirical_values) - self.analytic_value) / abs(self.analytic_value))

    @property
    def complete(self):
        return len(self.empirical_values) == self.multiplicity

    def to_dict(self):
        return {
            "analytic_degree": self.analytic_degree,
            "analytic_value": self.analytic_value,
            "multiplicity": self.multiplicity,
            "empirical_values": [float(v) for v in self.empirical_values],
            "rel_error": self.rel_error,
            "factor_tag": self.factor,
        }


@dataclass(frozen=True)
class MatchReport:
    records: tuple
    unmatched: tuple
    top_m: int
    by: str
    normalization: str = "per_sample"
    meta: dict = field(default_factory=dict)

    def positive(self):
        return [r for r in self.records if r.analytic_value > 0]

    def negative(self):
        return [r for r in self.records if r.analytic_value < 0]

    def max_slot_error(self):
        return float(max(np.max(r.rel_errors) for r in self.records))

    def to_dict(self):
        return {
            "normalization": self.normalization,
            "note": "empirical eigenvalues of B divided by N (operator scale for the empirical probability measure)",
            "top_m": self.top_m,
            "selection": self.by,
            "matches": [r.to_dict() for r in self.records],
            "unmatched": [float(v) for v in self.unmatched],
            **self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def match_spectra(emp, table, top_m, by="magnitude"):
    """Greedy multiplicity-aware matching of empirical to analytic eigenvalues.

    The ``top_m`` empirical eigenvalues (largest by ``|value|`` when ``by``
    is ``"magnitude"``, largest by value when ``"value"``) are split by
    sign. Analytic records, taken in order of decreasing ``|value|``, each
    claim up to ``multiplicity`` of the largest remaining empirical values
    of the same sign.
    """
    if emp.normalization != "per_sample":
        raise DomainError("match_spectra expects a per-sample normalized spectrum")
    if top_m > len(emp.eigenvalues):
        raise InsufficientDataError(f"top_m={top_m} exceeds {len(emp.eigenvalues)} eigenvalues")
    vals = np.asarray(emp.eigenvalues)
    if by == "magnitude":
        chosen = vals[np.argsort(-np.abs(vals), kind="stable")[:top_m]]
    elif by == "value":
        chosen = vals[:top_m]
    else:
        raise DomainError(f"unknown selection {by!r}")
    pools = {
        1: sorted(chosen[chosen > 0], key=abs, reverse=True),
        -1: sorted(chosen[chosen < 0], key=abs, reverse=True),
    }
    records = []
    analytic = sorted(table.records, key=lambda r: (-abs(r.value), r.degree, r.factor))
    for rec in analytic:
        pool = pools[1 if rec.value > 0 else -1]
        if not pool:
            if not pools[1] and not pools[-1]:
                break
            continue
        take, pool[:] = pool[: rec.multiplicity], pool[rec.multiplicity :]
        records.append(MatchRecord(rec.degree, rec.value, rec.multiplicity, tuple(float(v) for v in take), rec.factor))
    leftover = tuple(float(v) for v in pools[1] + pools[-1]) + tuple(float(v) for v in chosen[chosen == 0])
    return MatchReport(tuple(records), leftover, int(top_m), by)


def near_zero_fraction(emp, rel_tol=1e-6):
    vals = np.asarray(emp.eigenvalues)
    return float(np.mean(np.abs(vals) <= rel_tol * np.max(np.abs(vals))))


def cluster_eigenvalues(values, tol=None):
    """Group a descending array into runs whose neighbours differ by at most ``tol``.

    Default ``tol`` is ``1e-6 * max |value|``.
    """
    values = np.asarray(values, dtype=float)
    if tol is None:
        tol = 1e-6 * np.max(np.abs(values))
    clusters, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i - 1] - values[i]) > tol:
            clusters.append(np.arange(start, i))
            start = i
    return clusters


# -- embedding ---------------------------------------------------------------


def mds_embed(emp, m):
    """``N x m`` coordinates ``sqrt(lambda_j) v_j`` over the leading positive eigenvalues.

    Columns beyond the available positive eigenvalues are zero.
    """
    if m < 1:
        raise DomainError("target dimension must be >= 1")
    raw = emp.raw_eigenvalues
    pos = np.flatnonzero(raw > 0)
    if len(pos) == 0:
        raise DomainError("spectrum has no positive eigenvalues")
    use = pos[:m]
    Y = np.zeros((emp.n_points, m))
    Y[:, : len(use)] = emp.eigenvectors[:, use] * np.sqrt(raw[use])
    return Y


def _random_orthogonal(k, rng):
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def basis_invariance_check(emp, seed, mode="within", tol=None):
    """Largest change of an embedded pairwise distance under an eigenbasis mixing.

    ``mode="within"`` applies a random orthogonal mixing inside the first
    positive eigenvalue cluster of multiplicity >= 2; ``"across"`` rotates
    one eigenvector of each of the first two distinct positive clusters
    into each other (not distance preserving); ``"identity"`` mixes nothing.
    """
    raw = emp.raw_eigenvalues
    pos = np.flatnonzero(raw > 0)
    if len(pos) == 0:
        raise DomainError("spectrum has no positive eigenvalues")
    clusters = [pos[c] for c in cluster_eigenvalues(raw[pos], tol)]
    rng = np.random.default_rng(seed)
    V = emp.eigenvectors[:, pos].copy()
    local = {j: i for i, j in enumerate(pos)}
    if mode == "within":
        multi = [c for c in clusters if len(c) >= 2]
        if not multi:
            raise DomainError("no multiple eigenvalue cluster found")
        idx = [local[j] for j in multi[0]]
        V[:, idx] = V[:, idx] @ _random_orthogonal(len(idx), rng)
    elif mode == "across":
        if len(clusters) < 2:
            raise DomainError("need two distinct eigenvalue clusters")
        a, b = local[clusters[0][0]], local[clusters[1][0]]
        ang = rng.uniform(np.pi / 8, 3 * np.pi / 8)
        c, s = np.cos(ang), np.sin(ang)
        V[:, [a, b]] = V[:, [a, b]] @ np.array([[c, -s], [s, c]])
    elif mode != "identity":
        raise DomainError(f"unknown mixing mode {mode!r}")
    scale = np.sqrt(raw[pos])
    before = pdist(emp.eigenvectors[:, pos] * scale)
    after = pdist(V * scale)
    return float(np.max(np.abs(after - before)))


# -- Monte-Carlo commutation -------------------------------------------------


@dataclass(frozen=True)
class Harmonic:
    """An explicit Laplacian eigenfunction on a sphere or projective space."""

    name: str
    degree: int
    func: Callable

    def __call__(self, X):
        return self.func(np.asarray(X, dtype=float))


def constant_harmonic():
    return Harmonic("1", 0, lambda X: np.ones(X.shape[:-1]))


def coordinate_harmonic(space, i):
    """``x_i`` on ``S^n`` (degree 1); odd, so undefined on projective spaces."""
    if not isinstance(space, Sphere):
        raise DomainError("coordinate functions are harmonics on spheres only")
    if not 0 <= i <= space.n:
        raise DomainError(f"coordinate index {i} out of range")
    return Harmonic(f"x{i}", 1, lambda X: X[..., i])


def quadratic_harmonic(space, i, j):
    """``x_i x_j - delta_ij / (n + 1)`` (degree 2) on ``S^n`` or ``RP^n``."""
    if not isinstance(space, (Sphere, Projective)):
        raise DomainError("quadratic harmonics need a sphere or projective space")
    if not (0 <= i <= space.n and 0 <= j <= space.n):
        raise DomainError("coordinate index out of range")
    shift = 1.0 / (space.n + 1) if i == j else 0.0
    return Harmonic(f"x{i}x{j}", 2, lambda X: X[..., i] * X[..., j] - shift)


@dataclass(frozen=True)
class CommutationResult:
    ratio: float
    ratio_stderr: float
    residual: float
    residual_band: float
    analytic: float
    probe_values: np.ndarray
    t_phi: np.ndarray
    t_phi_stderr: np.ndarray

    def consistent(self, sigmas=3.0):
        return (
            abs(self.ratio - self.analytic) <= sigmas * self.ratio_stderr
            and self.residual <= sigmas * self.residual_band
        )


def _analytic_for(space, degree):
    if degree == 0:
        return 0.0
    if isinstance(space, Sphere):
        return sphere_eigenvalue(space.n, degree).value
    return projective_eigenvalue(space.n, degree).value


def commutation_check(space, harmonic, mc_samples=200_000, probes=32, seed=0, batches=20):
    """Monte-Carlo test that ``T`` maps a harmonic to a multiple of itself.

    ``(T phi)(x) = int K(x, y) (phi(y) - mean phi) dmu(y)`` is estimated at
    ``probes`` random points from ``mc_samples`` uniform points split into
    independent batches; batch scatter supplies the standard errors. On a
    homogeneous space ``K 1`` is constant, so centering the output changes
    nothing once the input is centered.
    """
    if not isinstance(space, (Sphere, Projective)):
        raise DomainError("commutation check needs a sphere or projective space")
    if mc_samples < batches * 2 or batches < 2:
        raise DomainError("need at least two samples per batch and two batches")
    seqs = np.random.SeedSequence(seed).spawn(batches + 1)
    x = sample_uniform(space, probes, seqs[0]).points
    phi_x = harmonic(x)
    if np.linalg.norm(phi_x) < 1e-12 * np.sqrt(probes):
        raise DomainError(f"harmonic {harmonic.name} is numerically zero at the probes")
    per_batch = mc_samples // batches
    est = np.empty((batches, probes))
    for b in range(batches):
        y = sample_uniform(space, per_batch, seqs[b + 1]).points
        phi_y = harmonic(y)
        phi_y = phi_y - phi_y.mean()
        d2 = sum(factor_sq_distances(space, x[:, None, :], y[None, :, :]))
        est[b] = (-0.5 * d2) @ phi_y / per_batch
    t_phi = est.mean(axis=0)
    t_se = est.std(axis=0, ddof=1) / np.sqrt(batches)
    denom = float(np.dot(phi_x, phi_x))
    ratio = float(np.dot(phi_x, t_phi) / denom)
    batch_ratios = est @ phi_x / denom
    ratio_se = float(batch_ratios.std(ddof=1) / np.sqrt(batches))
    norm_t = float(np.linalg.norm(t_phi))
    if norm_t == 0.0:
        residual, band = 0.0, 0.0
    else:
        residual = float(np.linalg.norm(t_phi - ratio * phi_x) / norm_t)
        band = float(np.sqrt(np.sum(t_se**2)) / norm_t)
    return CommutationResult(
        ratio, ratio_se, residual, band, _analytic_for(space, harmonic.degree), phi_x, t_phi, t_se
    )


def harmonic_inner_product(space, phi, psi, mc_samples=200_000, seed=0):
    """Monte-Carlo ``<T phi, psi>`` from independent pairs; returns ``(estimate, stderr)``."""
    s1, s2 = np.random.SeedSequence(seed).spawn(2)
    x = sample_uniform(space, mc_samples, s1).points
    y = sample_uniform(space, mc_samples, s2).points
    px = psi(x)
    py = phi(y)
    terms = -0.5 * sum(factor_sq_distances(space, x, y)) * (py - py.mean()) * (px - px.mean())
    return float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(mc_samples))
