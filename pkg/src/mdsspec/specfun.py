"""Special functions and quadrature used by the analytic spectra.

Zonal Legendre polynomials of the sphere ``S^n`` (normalized so that
``P^n_k(1) = 1``), Chebyshev polynomials, Rodrigues and volume constants,
harmonic-space dimensions and Gauss-Legendre rules.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, exp, lgamma, log, pi

import numpy as np

from .errors import ConvergenceError, DomainError

_T_SLACK = 1e-9
_INT_MAX = 2**63 - 1


def _check_t(t):
    arr = np.asarray(t, dtype=float)
    if arr.size and (np.any(arr < -1.0 - _T_SLACK) or np.any(arr > 1.0 + _T_SLACK)):
        raise DomainError(f"argument outside [-1, 1]: {t!r}")
    return np.clip(arr, -1.0, 1.0)


def _check_degree(k, name="k"):
    if int(k) != k or k < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {k!r}")
    return int(k)


def _check_dim(n):
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {n!r}")
    return int(n)


def _scalar_or_array(value, t):
    if np.ndim(t) == 0:
        return float(value)
    return value


def legendre_eval(n, k, t):
    """Evaluate the zonal Legendre polynomial ``P^n_k`` of ``S^n`` at ``t``.

    Uses the upward recurrence
    ``(k+n-1) P_{k+1} = (2k+n-1) t P_k - k P_{k-1}`` seeded with
    ``P_0 = 1`` and ``P_1 = t``. For ``n = 1`` this is the Chebyshev
    recurrence.

    Parameters
    ----------
    n : int
        Dimension of the sphere (``n >= 1``).
    k : int
        Degree.
    t : float or ndarray
        Argument(s) in ``[-1, 1]``.
    """
    n = _check_dim(n)
    k = _check_degree(k)
    x = _check_t(t)
    p_prev = np.ones_like(x)
    if k == 0:
        return _scalar_or_array(p_prev, t)
    p = x.copy()
    for j in range(1, k):
        p_prev, p = p, ((2 * j + n - 1) * x * p - j * p_prev) / (j + n - 1)
    return _scalar_or_array(p, t)


def legendre_table(n, kmax, t):
    """All ``P^n_0 .. P^n_kmax`` at ``t``; shape ``(kmax + 1,) + shape(t)``."""
    n = _check_dim(n)
    kmax = _check_degree(kmax, "kmax")
    x = _check_t(t)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for j in range(1, kmax):
        out[j + 1] = ((2 * j + n - 1) * x * out[j] - j * out[j - 1]) / (j + n - 1)
    return out


def legendre_scalar_sequence(n, kmax, t):
    """``[P^n_0(t), ..., P^n_kmax(t)]`` for one scalar ``t`` as a float array.

    Plain-float loop; much faster than :func:`legendre_table` when only a
    single argument is needed at very high degree.
    """
    n = _check_dim(n)
    kmax = _check_degree(kmax, "kmax")
    x = float(_check_t(t))
    out = np.empty(kmax + 1)
    out[0] = 1.0
    if kmax == 0:
        return out
    out[1] = x
    p_prev, p = 1.0, x
    for j in range(1, kmax):
        p_prev, p = p, ((2 * j + n - 1) * x * p - j * p_prev) / (j + n - 1)
        out[j + 1] = p
    return out


def chebyshev_eval(j, t):
    """Chebyshev polynomial of the first kind ``C_j(t)`` by recurrence."""
    j = _check_degree(j, "j")
    x = _check_t(t)
    c_prev = np.ones_like(x)
    if j == 0:
        return _scalar_or_array(c_prev, t)
    c = x.copy()
    for _ in range(1, j):
        c_prev, c = c, 2.0 * x * c - c_prev
    return _scalar_or_array(c, t)


@dataclass(frozen=True)
class PolyFamily:
    """A polynomial family: ``legendre_sphere`` (with ``n``) or ``chebyshev_first_kind``."""

    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind == "legendre_sphere":
            _check_dim(self.n)
        elif self.kind == "chebyshev_first_kind":
            if self.n is not None:
                raise DomainError("chebyshev_first_kind takes no dimension")
        else:
            raise DomainError(f"unknown polynomial family {self.kind!r}")

    @classmethod
    def legendre_sphere(cls, n):
        return cls("legendre_sphere", int(n))

    @classmethod
    def chebyshev(cls):
        return cls("chebyshev_first_kind")

    def __call__(self, k, t):
        if self.kind == "legendre_sphere":
            return legendre_eval(self.n, k, t)
        return chebyshev_eval(k, t)

    def table(self, kmax, t):
        # P^1_k coincides with C_k, so one recurrence serves both
        return legendre_table(self.n if self.n is not None else 1, kmax, t)


def log_rodrigues_constant(n, two_k):
    n = _check_dim(n)
    two_k = _check_degree(two_k, "two_k")
    if two_k % 2:
        raise DomainError(f"two_k must be even, got {two_k}")
    k = two_k // 2
    return -k * log(4.0) + lgamma(n / 2) - lgamma(n / 2 + two_k)


def rodrigues_constant(n, two_k):
    """``R^n_{2k} = 4^{-k} Gamma(n/2) / Gamma(n/2 + 2k)``, computed in log space."""
    return exp(log_rodrigues_constant(n, two_k))


def sphere_volume(m):
    """Surface measure of the unit sphere ``S^m``; ``vol(S^0) = 2``."""
    m = _check_degree(m, "m")
    if m == 0:
        return 2.0
    return exp(log(2.0) + (m + 1) / 2 * log(pi) - lgamma((m + 1) / 2))


def sigma_constant(n):
    """``sigma_n = -vol(S^{n-1}) / vol(S^n)``."""
    n = _check_dim(n)
    return -sphere_volume(n - 1) / sphere_volume(n)


def sphere_harmonic_dim(n, k):
    """Dimension of degree-``k`` spherical harmonics on ``S^n`` (exact integer)."""
    n = _check_dim(n)
    k = _check_degree(k)
    if k == 0:
        d = 1
    elif k == 1:
        d = n + 1
    else:
        # C(k+n, n) - C(k+n-2, n) == ((2k+n-1)/(k+n-1)) C(k+n-1, n-1)
        d = comb(k + n, n) - comb(k + n - 2, n)
    if d > _INT_MAX:
        raise OverflowError(f"harmonic dimension for n={n}, k={k} exceeds int64")
    return d


def projective_harmonic_dim(n, two_k):
    """Dimension of the degree-``2k`` harmonics on ``RP^n``."""
    two_k = _check_degree(two_k, "two_k")
    if two_k % 2:
        raise DomainError(f"two_k must be even, got {two_k}")
    return sphere_harmonic_dim(n, two_k)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    @property
    def order(self):
        return len(self.nodes)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _gauss_reference(order, tol=1e-14, max_iter=100):
    # Newton on P_order from Chebyshev-point guesses
    i = np.arange(order)
    x = np.cos(pi * (i + 0.75) / (order + 0.5))
    for _ in range(max_iter):
        p_prev = np.ones_like(x)
        p = x.copy()
        for j in range(1, order):
            p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
        dp = order * (x * p - p_prev) / (x * x - 1.0)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    else:
        raise ConvergenceError(
            f"Gauss-Legendre node solver did not converge for order {order} "
            f"within {max_iter} iterations (last step {np.max(np.abs(step)):.3e})"
        )
    p_prev = np.ones_like(x)
    p = x.copy()
    for j in range(1, order):
        p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
    dp = order * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(order, interval=(-1.0, 1.0)):
    """Gauss-Legendre rule with ``order`` nodes mapped to ``interval``."""
    if int(order) != order or order < 2:
        raise DomainError(f"quadrature order must be an integer >= 2, got {order!r}")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise DomainError(f"empty interval {interval!r}")
    x, w = _gauss_reference(int(order))
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    return QuadratureRule(nodes, weights, (a, b))
