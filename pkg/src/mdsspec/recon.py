"""Pair series of the infinite MDS map, evaluated through the addition theorem.

For one harmonic degree with eigenvalue ``lam`` and harmonic space of
dimension ``dim``, summing over any orthonormal basis gives

    lam * sum_i (phi_i(x) - phi_i(y))**2 = lam * 2 * dim * (1 - P(x . y)),

so neither eigenfunctions nor a basis choice are needed. Summing over all
degrees reconstructs ``d(x, y)**2`` when ``T`` is trace class; summing over
the positive eigenvalues only gives ``||M(x) - M(y)||**2``. A product space
contributes the sum of its factor series.
"""

from __future__ import annotations

import csv
import io
import json
from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .spaces import Projective, Sphere, Torus, TWO_PI, factor_cosines, format_space, geodesic_distance
from .specfun import chebyshev_eval, legendre_eval, legendre_scalar_sequence, sphere_harmonic_dim
from .spectra import build_spectrum, circle_eigenvalue, projective_eigenvalue, rp1_eigenvalue, sphere_eigenvalue

MODES = ("reconstruction_all_eigenvalues", "embedded_positive_only")

# tables are immutable, so repeated pairs on one space share them
_table = lru_cache(maxsize=64)(build_spectrum)


def _check_cosine(atom, t):
    t = float(t)
    if not -1.0 - 1e-9 <= t <= 1.0 + 1e-9:
        raise DomainError(f"cosine {t!r} outside [-1, 1]")
    t = min(1.0, max(-1.0, t))
    return abs(t) if isinstance(atom, Projective) else t


def _atom_eigenvalue(atom, degree):
    if isinstance(atom, Torus):
        return circle_eigenvalue(degree, atom.lengths[0])
    if isinstance(atom, Sphere):
        return circle_eigenvalue(degree) if atom.n == 1 else sphere_eigenvalue(atom.n, degree).value
    if degree % 2:
        raise DomainError("projective harmonics have even degree")
    return rp1_eigenvalue(degree) if atom.n == 1 else projective_eigenvalue(atom.n, degree).value


def pair_term(space, degree, t, eigenvalue=None):
    """Contribution ``lam * 2 * dim * (1 - P(t))`` of one degree of an atomic space.

    ``t`` is the cosine argument: ``x . y`` on spheres, ``|x . y|`` on
    projective spaces (the sign is ignored) and ``cos(2 pi delta / L)`` on a
    circle of circumference ``L``.
    """
    atoms = space.atoms()
    if len(atoms) != 1:
        raise DomainError("pair_term takes an atomic space; product series are sums of factor series")
    atom = atoms[0]
    t = _check_cosine(atom, t)
    lam = _atom_eigenvalue(atom, degree) if eigenvalue is None else float(eigenvalue)
    if isinstance(atom, Torus):
        return lam * 4.0 * (1.0 - chebyshev_eval(degree, t))
    dim = sphere_harmonic_dim(atom.n, degree)
    return lam * 2.0 * dim * (1.0 - legendre_eval(atom.n, degree, t))


def _atom_terms(atom, t, kmax, quad_order=None, method="auto"):
    """Degrees, eigenvalues and pair terms of one atom up to ``kmax``."""
    t = _check_cosine(atom, t)
    table = _table(atom, int(kmax), quad_order, method)
    deg = table.degrees
    lam = table.values
    dim = table.multiplicities.astype(float)
    n = 1 if isinstance(atom, Torus) else atom.n
    p = legendre_scalar_sequence(n, kmax, t)[deg]
    return deg, lam, lam * 2.0 * dim * (1.0 - p), dim


@dataclass(frozen=True, eq=False)
class PairSeries:
    space: object
    cosines: tuple
    mode: str
    degrees: np.ndarray
    terms: np.ndarray
    target: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def partial_sums(self):
        return np.cumsum(self.terms)

    def at(self, cutoff):
        """``S_K`` for degree cutoff ``K``."""
        keep = self.degrees <= cutoff
        return float(np.sum(self.terms[keep]))

    @property
    def absolute_partial_sums(self):
        return np.cumsum(np.abs(self.terms))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "S_K", "increment"])
        for k, s, inc in zip(self.degrees, self.partial_sums, self.terms):
            w.writerow([int(k), format(s, ".17g"), format(inc, ".17g")])
        return buf.getvalue()

    def to_dict(self):
        return {
            "space": format_space(self.space),
            "cosines": [float(c) for c in self.cosines],
            "mode": self.mode,
            "target": self.target,
            "K": [int(k) for k in self.degrees],
            "S_K": [float(s) for s in self.partial_sums],
            "increment": [float(s) for s in self.terms],
            **self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def _series(space, cosines, kmax, mode, quad_order=None, method="auto", target=None):
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    atoms = space.atoms()
    cosines = tuple(np.atleast_1d(np.asarray(cosines, dtype=float)).tolist())
    if len(cosines) != len(atoms):
        raise DomainError(f"{format_space(space)} needs {len(atoms)} cosine(s), got {len(cosines)}")
    total = np.zeros(int(kmax) + 1)
    present = np.zeros(int(kmax) + 1, dtype=bool)
    for atom, t in zip(atoms, cosines):
        deg, lam, terms, _ = _atom_terms(atom, t, kmax, quad_order, method)
        if mode == "embedded_positive_only":
            terms = np.where(lam > 0, terms, 0.0)
        # fixed-order accumulation keeps results bit-stable
        np.add.at(total, deg, terms)
        present[deg] = True
    deg = np.flatnonzero(present)
    return PairSeries(space, cosines, mode, deg, total[deg], target)


def reconstruction_from_cosines(space, cosines, kmax, quad_order=None, method="auto"):
    return _series(space, cosines, kmax, MODES[0], quad_order, method)


def reconstruction_partial_sums(space, x, y, kmax, quad_order=None, method="auto"):
    """All-eigenvalue series ``sum lam (phi(x) - phi(y))^2`` with target ``d(x, y)^2``."""
    cos = [float(c) for c in factor_cosines(space, x, y)]
    d2 = geodesic_distance(space, x, y) ** 2
    return _series(space, cos, kmax, MODES[0], quad_order, method, target=float(d2))


def embedded_distance_partial_sums(space, t, kmax, quad_order=None, method="auto"):
    """Positive-eigenvalue series ``||M(x) - M(y)||^2`` for cosine argument(s) ``t``."""
    return _series(space, t, kmax, MODES[1], quad_order, method)


def tail_bound(space, cosines, cutoff, far=None, quad_order=None):
    """Bound on ``|S_inf - S_cutoff|`` for the all-eigenvalue series.

    Sums ``|term|`` over ``cutoff < degree <= far`` (default ``10 * cutoff``)
    and adds a power-law remainder for the degrees above ``far``, fitted to
    the envelope ``4 |lam| dim`` on the upper half of the window. Returns
    ``inf`` when the envelope decays no faster than ``1/degree``.
    """
    far = 10 * int(cutoff) if far is None else int(far)
    atoms = space.atoms()
    cosines = np.atleast_1d(np.asarray(cosines, dtype=float))
    bound = 0.0
    for atom, t in zip(atoms, cosines):
        deg, lam, terms, dim = _atom_terms(atom, t, far, quad_order)
        window = deg > cutoff
        bound += float(np.sum(np.abs(terms[window])))
        env = 4.0 * np.abs(lam) * dim
        upper = deg > (cutoff + far) / 2
        slope = np.polyfit(np.log(deg[upper]), np.log(env[upper]), 1)[0]
        p = -slope
        if p <= 1.0:
            return float("inf")
        step = 2 if isinstance(atom, Projective) else 1
        bound += float(env[-1] * deg[-1] / ((p - 1.0) * step))
    return bound


DivergenceReport = namedtuple(
    "DivergenceReport",
    "n cosine cutoffs partial_sums increments log_coefficients growth_exponent law term_floor_ratio",
)


def divergence_probe(n, t=0.0, cutoffs=(100, 1000, 10_000, 100_000)):
    """Growth of ``||M(x) - M(y)||^2`` partial sums on odd ``RP^n``.

    ``growth_exponent`` is the log-log slope of the increments between
    successive cutoffs (0 for logarithmic growth, 1 for linear, negative
    when the series converges). ``term_floor_ratio`` is
    ``min term / k^((n-5)/2)`` over the positive terms of the last decade.
    """
    if int(n) != n or n < 1 or n % 2 == 0:
        raise DomainError(f"divergence probe needs odd n, got {n!r}")
    cutoffs = sorted(int(k) for k in cutoffs)
    if len(cutoffs) < 2:
        raise DomainError("need at least two cutoffs")
    series = embedded_distance_partial_sums(Projective(int(n)), t, cutoffs[-1])
    sums = np.array([series.at(k) for k in cutoffs])
    inc = np.diff(sums)
    logc = inc / np.log(np.array(cutoffs[1:]) / np.array(cutoffs[:-1]))
    if np.all(inc > 0):
        growth = float(np.polyfit(np.log(cutoffs[1:]), np.log(inc), 1)[0])
    else:
        growth = float("-inf")
    if growth < -0.5:
        law = "convergent"
    elif abs(growth) <= 0.25:
        law = "logarithmic"
    else:
        law = "power"
    last = (series.degrees > cutoffs[-2]) & (series.terms > 0)
    k = series.degrees[last] / 2.0
    floor = float(np.min(series.terms[last] / k ** ((n - 5) / 2))) if last.any() else 0.0
    return DivergenceReport(int(n), float(t), tuple(cutoffs), tuple(sums), tuple(inc), tuple(logc), growth, law, floor)


SnowflakeScan = namedtuple(
    "SnowflakeScan", "distances sums ratios beta alpha ratio_mean ratio_spread ratio_tolerance kmax"
)


def snowflake_scan(resolution=64, kmax=400, length=TWO_PI):
    """Embedded squared distance on a circle against geodesic distance.

    Scans the ``resolution // 2 + 1`` grid distances ``L j / resolution``,
    fits ``S ~ c d^beta`` and reports ``alpha = beta / 2`` for the norm.
    ``ratio_tolerance`` is the largest relative truncation bound
    ``sum_{m > kmax} 8 lam_m / (S_m d)`` over the nonzero rows.
    """
    if resolution < 8:
        raise DomainError("resolution must be >= 8")
    circ = Torus((float(length),))
    j = np.arange(resolution // 2 + 1)
    d = length * j / resolution
    sums = np.array([embedded_distance_partial_sums(circ, np.cos(TWO_PI * dj / length), kmax).at(kmax) for dj in d])
    nz = d > 0
    beta, _ = np.polyfit(np.log(d[nz]), np.log(sums[nz]), 1)
    ratios = np.full(len(d), np.nan)
    ratios[nz] = sums[nz] / d[nz]
    # positive circle eigenvalues sit on odd m; 1 - cos <= 2 and dim = 2
    m = np.arange(kmax + 1, 40 * kmax + 1)
    m = m[m % 2 == 1]
    tail = float(np.sum(8.0 * (length / TWO_PI) ** 2 / m.astype(float) ** 2)) + 4.0 * (length / TWO_PI) ** 2 / (40 * kmax)
    mean = float(np.mean(ratios[nz]))
    tol = float(np.max(tail / d[nz]) / mean)
    spread = float((np.max(ratios[nz]) - np.min(ratios[nz])) / mean)
    return SnowflakeScan(d, sums, ratios, float(beta), float(beta) / 2, mean, spread, tol, int(kmax))
