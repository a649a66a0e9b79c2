"""Reference values computed independently of the package's own quadrature.

These use adaptive QUADPACK Fourier integrals (``scipy.integrate.quad`` with
a cosine weight) applied directly to the kernel ``-theta**2 / 2``, so they
share no code with the Gauss rule or the Legendre recurrence.
"""

from math import pi

from scipy.integrate import quad


def circle_fourier_eigenvalue(m, length=2 * pi):
    """``(1/L) int_{-L/2}^{L/2} (-s^2/2) cos(2 pi m s / L) ds`` on a circle of circumference ``L``."""
    half = length / 2
    val, _ = quad(lambda s: -0.5 * s * s, -half, half, weight="cos", wvar=2 * pi * m / length, epsabs=1e-14, epsrel=1e-13)
    return val / length


def sphere1_oracle(m):
    return circle_fourier_eigenvalue(m, 2 * pi)


def projective1_oracle(two_k):
    """``RP^1`` eigenvalue at degree ``2j`` via the Chebyshev integral ``(1/pi) int_0^{pi/2} -theta^2 cos(2 j theta)``."""
    j = two_k // 2
    val, _ = quad(lambda t: -t * t, 0.0, pi / 2, weight="cos", wvar=2 * j, epsabs=1e-14, epsrel=1e-13)
    return val / pi
