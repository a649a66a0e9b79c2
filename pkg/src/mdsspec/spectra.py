"""Analytic spectrum of the MDS operator ``T = P K P`` on symmetric spaces.

Eigenvalues refer to the normalized (probability) volume measure and the
kernel ``K(x, y) = -d(x, y)**2 / 2``. On a sphere or projective space one
eigenvalue sits on each harmonic degree; these are obtained from a
one-dimensional zonal integral after the substitution ``t = cos(theta)``:

* sphere ``S^n``, degree ``k``::

      (vol S^{n-1} / vol S^n) * int_0^pi (-theta^2 / 2) P^n_k(cos theta) sin^{n-1}(theta) dtheta

* projective ``RP^n``, even degree ``2k``::

      sigma_n * int_0^{pi/2} theta^2 P^n_{2k}(cos theta) sin^{n-1}(theta) dtheta

Degree 0 (the constants) is annihilated by ``P`` and never stored.
"""

from __future__ import annotations

import csv
import io
import json
from collections import namedtuple
from dataclasses import dataclass
from math import pi

import numpy as np

from . import __version__
from .errors import DomainError, InsufficientDataError, QuadratureOrderError
from .spaces import Product, Projective, Space, Sphere, Torus, TWO_PI, format_space, parse_space
from .specfun import (
    gauss_rule,
    legendre_table,
    projective_harmonic_dim,
    rodrigues_constant,
    sigma_constant,
    sphere_harmonic_dim,
)

PROVENANCES = ("quadrature", "recurrence", "closed_form")


def default_quad_order(degree):
    return max(200, 4 * int(degree) + 50)


def _resolve_order(degree, quad_order):
    q = default_quad_order(degree) if quad_order is None else int(quad_order)
    if q < 2 * degree + 50:
        raise QuadratureOrderError(
            f"quadrature order {q} too low for degree {degree} (need >= {2 * degree + 50})"
        )
    return q


@dataclass(frozen=True)
class EigvalRecord:
    degree: int
    value: float
    multiplicity: int
    provenance: str
    factor: str = ""
    error: float | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")
        if self.multiplicity < 1:
            raise DomainError("multiplicity must be positive")


Signature = namedtuple("Signature", "zero positive negative positive_degrees negative_degrees")
ExponentFit = namedtuple("ExponentFit", "slope intercept residual n_points")


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    space: Space
    records: tuple
    kmax: int
    quad_order: int | None = None
    method: str = "auto"
    zero_kernel_infinite: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def degrees(self):
        return np.array([r.degree for r in self.records], dtype=int)

    @property
    def values(self):
        return np.array([r.value for r in self.records], dtype=float)

    @property
    def multiplicities(self):
        return np.array([r.multiplicity for r in self.records], dtype=np.int64)

    def nonzero_multiset(self):
        """Eigenvalues repeated by multiplicity, sorted descending."""
        return np.sort(np.repeat(self.values, self.multiplicities))[::-1]

    def factor_table(self, tag):
        return [r for r in self.records if r.factor == tag]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["factor_tag", "degree", "eigenvalue", "multiplicity", "provenance", "trace_partial_sum"])
        for r, s in zip(self.records, trace_partial_sums(self)):
            w.writerow([r.factor, r.degree, format(r.value, ".17g"), r.multiplicity, r.provenance, format(s, ".17g")])
        return buf.getvalue()

    def to_dict(self):
        sig = signature_census(self)
        return {
            "version": __version__,
            "space": format_space(self.space),
            "kmax": self.kmax,
            "quad_order": self.quad_order,
            "method": self.method,
            "zero_kernel_infinite": self.zero_kernel_infinite,
            "signature": sig._asdict(),
            "records": [
                {
                    "factor_tag": r.factor,
                    "degree": r.degree,
                    "eigenvalue": r.value,
                    "multiplicity": r.multiplicity,
                    "provenance": r.provenance,
                }
                for r in self.records
            ],
            "trace_partial_sums": [float(x) for x in trace_partial_sums(self)],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        records = tuple(
            EigvalRecord(r["degree"], float(r["eigenvalue"]), r["multiplicity"], r["provenance"], r["factor_tag"])
            for r in obj["records"]
        )
        return cls(
            parse_space(obj["space"]),
            records,
            obj["kmax"],
            obj["quad_order"],
            obj.get("method", "auto"),
            obj["zero_kernel_infinite"],
        )


# -- zonal integrals ---------------------------------------------------------


def _zonal_integrals(n, kmax, order, upper, degrees_step):
    """``int_0^upper theta^2 P^n_k(cos theta) sin^{n-1}(theta) dtheta`` for k = 0..kmax."""
    rule = gauss_rule(order, (0.0, upper))
    theta = rule.nodes
    t = np.cos(theta)
    w = rule.weights * theta**2 * np.sin(theta) ** (n - 1)
    out = np.full(kmax + 1, np.nan)
    p_prev = np.ones_like(t)
    out[0] = w.sum()
    if kmax == 0:
        return out
    p = t.copy()
    out[1] = np.dot(w, p)
    for j in range(1, kmax):
        p_prev, p = p, ((2 * j + n - 1) * t * p - j * p_prev) / (j + n - 1)
        if (j + 1) % degrees_step == 0:
            out[j + 1] = np.dot(w, p)
    return out


def _sphere_values(n, kmax, order):
    # vol(S^{n-1})/vol(S^n) == -sigma_n
    return 0.5 * sigma_constant(n) * _zonal_integrals(n, kmax, order, pi, 1)


def _projective_values(n, kmax, order):
    vals = sigma_constant(n) * _zonal_integrals(n, kmax, order, pi / 2, 2)
    vals[1::2] = np.nan
    return vals


def _error_estimate(coarse, fine):
    # rounding floor: a few ulps of the degree-0 integral, which bounds every |integrand| sum
    floor = 8 * np.finfo(float).eps * abs(coarse[0])
    return np.maximum(np.abs(coarse - fine), floor)


def sphere_eigenvalues(n, kmax, quad_order=None, with_error=False):
    """Quadrature eigenvalues of ``T`` on ``S^n`` indexed by degree 0..kmax.

    Index 0 holds the degree-0 value of ``K`` (not an eigenvalue of ``T``).
    With ``with_error`` also returns ``|value(q) - value(2q)|``.
    """
    q = _resolve_order(kmax, quad_order)
    vals = _sphere_values(int(n), int(kmax), q)
    if not with_error:
        return vals
    return vals, _error_estimate(vals, _sphere_values(int(n), int(kmax), 2 * q))


def projective_eigenvalues(n, kmax, quad_order=None, with_error=False):
    """Quadrature eigenvalues on ``RP^n`` indexed by degree; odd entries are NaN."""
    q = _resolve_order(kmax, quad_order)
    vals = _projective_values(int(n), int(kmax), q)
    if not with_error:
        return vals
    return vals, _error_estimate(vals, _projective_values(int(n), int(kmax), 2 * q))


def sphere_eigenvalue(n, k, quad_order=None):
    """Eigenvalue of ``T`` on the degree-``k`` harmonics of ``S^n`` (``k >= 1``)."""
    if int(k) != k or k < 1:
        raise DomainError(f"sphere degree must be >= 1, got {k!r}")
    k = int(k)
    vals, err = sphere_eigenvalues(n, k, quad_order, with_error=True)
    return EigvalRecord(k, float(vals[k]), sphere_harmonic_dim(n, k), "quadrature", error=float(err[k]))


def projective_eigenvalue(n, two_k, quad_order=None):
    """Eigenvalue of ``T`` on the degree-``2k`` harmonics of ``RP^n`` (``2k >= 2``)."""
    if int(two_k) != two_k or two_k < 2 or two_k % 2:
        raise DomainError(f"projective degree must be even and >= 2, got {two_k!r}")
    two_k = int(two_k)
    vals, err = projective_eigenvalues(n, two_k, quad_order, with_error=True)
    return EigvalRecord(
        two_k, float(vals[two_k]), projective_harmonic_dim(n, two_k), "quadrature", error=float(err[two_k])
    )


# -- closed forms ------------------------------------------------------------


def circle_eigenvalue(m, length=TWO_PI):
    """``(L / 2 pi)^2 (-1)^{m+1} / m^2`` on the circle of circumference ``L``."""
    if int(m) != m or m < 1:
        raise DomainError(f"circle degree must be >= 1, got {m!r}")
    m = int(m)
    scale = (length / TWO_PI) ** 2
    return scale * (1.0 if m % 2 else -1.0) / (m * m)


def rp1_eigenvalue(two_k):
    """``RP^1`` is a circle of circumference ``pi``: ``(-1)^{j+1} / (4 j^2)`` at degree ``2j``."""
    if int(two_k) != two_k or two_k < 2 or two_k % 2:
        raise DomainError(f"projective degree must be even and >= 2, got {two_k!r}")
    return circle_eigenvalue(int(two_k) // 2, pi)


def _circle_values(kmax, length=TWO_PI):
    m = np.arange(kmax + 1, dtype=float)
    out = np.full(kmax + 1, np.nan)
    m1 = m[1:]
    out[1:] = (length / TWO_PI) ** 2 * np.where(m1 % 2 == 1, 1.0, -1.0) / (m1 * m1)
    return out


# -- dimension-lifting recurrence ----------------------------------------------


def lift_coefficients(n, two_k):
    """Coefficients ``(a, b)`` with ``lam^{n+2}_{2k-2} = (a * lam^n_{2k-2} - lam^n_{2k} / sigma_n) / b``.

    Works elementwise on an array of even degrees.
    """
    tk = np.asarray(two_k, dtype=float)
    k = tk / 2
    s_n = sigma_constant(n)
    s_n2 = sigma_constant(n + 2)
    # closed forms of R^n_{2k}/R^n_{2k-2} and R^n_{2k}/R^{n+2}_{2k-2}
    r_same = 1.0 / (4.0 * (n / 2 + tk - 2) * (n / 2 + tk - 1))
    r_up = 1.0 / (2.0 * n * (n / 2 + tk - 1))
    a = (4 * k + n - 2) * (4 * k + n - 4) * r_same / s_n
    b = (4 * k + n - 2) * (4 * k + n - 3) * r_up / s_n2
    return a, b


def rodrigues_ratios(n, two_k):
    """The two Rodrigues-constant ratios of the recurrence, via log-gamma."""
    return (
        rodrigues_constant(n, two_k) / rodrigues_constant(n, two_k - 2),
        rodrigues_constant(n, two_k) / rodrigues_constant(n + 2, two_k - 2),
    )


def recurrence_lift(n, two_k, lam_n_2k, lam_n_2km2):
    """``lam^{n+2}_{2k-2}`` from ``lam^n_{2k}`` and ``lam^n_{2k-2}``."""
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be >= 1, got {n!r}")
    tk = np.asarray(two_k)
    if np.any(tk < 2) or np.any(tk % 2):
        raise DomainError(f"two_k must be even and >= 2, got {two_k!r}")
    a, b = lift_coefficients(int(n), tk)
    out = (a * np.asarray(lam_n_2km2, dtype=float) - np.asarray(lam_n_2k, dtype=float) / sigma_constant(n)) / b
    return float(out) if np.ndim(out) == 0 else out


def recurrence_residual(n, two_k, lam_n_2k, lam_n_2km2, lam_n2_2km2):
    """Residual of the recurrence on three independently computed values."""
    a, b = lift_coefficients(int(n), two_k)
    return lam_n_2k / sigma_constant(n) - a * lam_n_2km2 + b * lam_n2_2km2


def projective_recurrence_values(n, kmax):
    """Spectrum of odd ``RP^n`` indexed by degree, lifted from the ``RP^1`` closed form."""
    n = int(n)
    if n < 1 or n % 2 == 0:
        raise DomainError(f"recurrence spectra start from RP^1; n must be odd, got {n}")
    top = int(kmax) + (n - 1)
    top += top % 2
    vals = np.full(top + 1, np.nan)
    deg = np.arange(2, top + 1, 2)
    vals[deg] = (deg // 2 % 2 * 2 - 1) / (deg.astype(float) ** 2)
    for m in range(1, n, 2):
        lifted = np.full(len(vals), np.nan)
        tk = np.arange(4, len(vals), 2)
        tk = tk[~np.isnan(vals[tk])]
        lifted[tk - 2] = recurrence_lift(m, tk, vals[tk], vals[tk - 2])
        vals = lifted
    return vals[: int(kmax) + 1]


# -- tables ------------------------------------------------------------------


def _atom_records(atom, kmax, quad_order, method, tag):
    if isinstance(atom, Torus):
        vals = _circle_values(kmax, atom.lengths[0])
        return [EigvalRecord(m, float(vals[m]), 2, "closed_form", tag) for m in range(1, kmax + 1)]
    if isinstance(atom, Sphere):
        if atom.n == 1 and method in ("auto", "closed_form"):
            vals, prov = _circle_values(kmax), "closed_form"
        else:
            vals, prov = sphere_eigenvalues(atom.n, kmax, quad_order), "quadrature"
        return [
            EigvalRecord(k, float(vals[k]), sphere_harmonic_dim(atom.n, k), prov, tag) for k in range(1, kmax + 1)
        ]
    if isinstance(atom, Projective):
        n = atom.n
        if n == 1 and method in ("auto", "closed_form"):
            vals, prov = np.full(kmax + 1, np.nan), "closed_form"
            vals[2::2] = _circle_values(kmax // 2, pi)[1:]
        elif n % 2 == 1 and method in ("auto", "recurrence"):
            vals, prov = projective_recurrence_values(n, kmax), "recurrence"
        elif method == "recurrence":
            raise DomainError("recurrence spectra are only available for odd n")
        else:
            vals, prov = projective_eigenvalues(n, kmax, quad_order), "quadrature"
        return [
            EigvalRecord(d, float(vals[d]), projective_harmonic_dim(n, d), prov, tag)
            for d in range(2, kmax + 1, 2)
        ]
    raise DomainError(f"unsupported space {atom!r}")


def build_spectrum(space, kmax, quad_order=None, method="auto"):
    """Analytic spectrum up to degree ``kmax``.

    ``method`` is ``"auto"``, ``"quadrature"``, ``"recurrence"`` (odd
    projective spaces) or ``"closed_form"`` (circles and ``RP^1``). For a
    product the nonzero spectrum is the disjoint union of the factor
    spectra; records carry a ``"<index>:<factor>"`` tag.
    """
    if int(kmax) != kmax or kmax < 2:
        raise DomainError(f"kmax must be an integer >= 2, got {kmax!r}")
    if method not in ("auto", "quadrature", "recurrence", "closed_form"):
        raise DomainError(f"unknown method {method!r}")
    kmax = int(kmax)
    if quad_order is not None:
        _resolve_order(kmax, quad_order)
    atoms = space.atoms()
    multi = len(atoms) > 1
    records = []
    for i, atom in enumerate(atoms):
        tag = f"{i}:{format_space(atom)}" if multi else ""
        records.extend(_atom_records(atom, kmax, quad_order, method, tag))
    records.sort(key=lambda r: (r.degree, r.factor))
    return SpectrumTable(space, tuple(records), kmax, quad_order, method, zero_kernel_infinite=multi)


def signature_census(table):
    """Multiplicity-weighted (zero, positive, negative) counts up to the cutoff.

    ``zero`` is ``"infinite"`` when the kernel of ``T`` is infinite
    dimensional (products), otherwise 1 (the constants).
    """
    if not table.records:
        raise InsufficientDataError("empty spectrum table")
    vals = table.values
    mult = table.multiplicities
    pos = vals > 0
    neg = vals < 0
    return Signature(
        "infinite" if table.zero_kernel_infinite else 1,
        int(mult[pos].sum()),
        int(mult[neg].sum()),
        int(pos.sum()),
        int(neg.sum()),
    )


def trace_partial_sums(table):
    """Cumulative ``sum |lambda| * multiplicity`` in record order."""
    if not table.records:
        raise InsufficientDataError("empty spectrum table")
    return np.cumsum(np.abs(table.values) * table.multiplicities)


def degree_index(table):
    """Asymptotic index: ``k`` of degree ``2k`` on projective spaces, else the degree."""
    deg = table.degrees
    if isinstance(table.space, Projective):
        return deg // 2
    return deg


def asymptotic_exponent_fit(table, k_min, k_max):
    """Least-squares slope of ``log |lambda|`` against ``log k`` for ``k_min <= k <= k_max``."""
    k = degree_index(table)
    keep = (k >= k_min) & (k <= k_max)
    if keep.sum() < 8:
        raise InsufficientDataError(f"only {int(keep.sum())} degrees in [{k_min}, {k_max}]; need 8")
    x = np.log(k[keep].astype(float))
    y = np.log(np.abs(table.values[keep]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ExponentFit(float(slope), float(intercept), resid, int(keep.sum()))


def chebyshev_legendre_overlap(k, j, quad_order=None):
    """``int_0^1 P^2_{2k}(t) C_{2j}(t) (1 - t^2)^{-1/2} dt``."""
    if int(k) != k or int(j) != j or k < 0 or j < 0:
        raise DomainError("k and j must be nonnegative integers")
    deg = 2 * max(int(k), int(j))
    q = _resolve_order(deg, quad_order)
    rule = gauss_rule(q, (0.0, pi / 2))
    theta = rule.nodes
    p = legendre_table(2, 2 * int(k), np.cos(theta))[-1]
    return float(np.dot(rule.weights, p * np.cos(2 * int(j) * theta)))
