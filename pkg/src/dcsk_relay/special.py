"""Special-function kernels used by the closed-form analysis.

The incomplete gamma, erfc and modified Bessel functions are delegated to
scipy's certified implementations behind thin domain-checked wrappers; the
Gauss-Hermite rule is built locally by Newton iteration on the Hermite
recurrence, and the only Meijer G-function the analysis needs (the
``G^{2,0}_{0,2}`` kernel) is evaluated exactly through its Bessel-K
identity.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp


def erfc(x):
    """Complementary error function (vectorized)."""
    return _sp.erfc(x)


def regularized_lower_gamma(a: float, x) -> float:
    """``gamma(a, x) / Gamma(a)`` for shape a > 0 and argument x >= 0."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("argument must be non-negative")
    out = _sp.gammainc(a, x)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind K_nu(x)."""
    return _sp.kv(nu, x)


def meijer_g_2002(x, b1: float, b2: float):
    """``G^{2,0}_{0,2}(x | -; b1, b2)`` via ``2 x^{(b1+b2)/2} K_{b1-b2}(2 sqrt(x))``.

    The identity is exact; it is the only Meijer-G case the analysis uses
    (the R->D SNR density and its Gauss-Hermite expectation).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("argument must be positive")
    out = 2.0 * x ** (0.5 * (b1 + b2)) * _sp.kv(b1 - b2, 2.0 * np.sqrt(x))
    return float(out) if out.ndim == 0 else out


def _hermite_newton(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Roots and weights of the physicists' Hermite polynomial H_order.

    Newton iteration on the orthonormal three-term recurrence; initial
    guesses follow the classic largest-root asymptotics and march inward.
    Weights come from the derivative relation ``H'_M = 2 M H_{M-1}``
    expressed in the orthonormal basis, for which ``w = 2 / p'(x)^2``.
    """
    m = order
    x = np.zeros(m)
    w = np.zeros(m)
    z = 0.0
    for i in range((m + 1) // 2):
        if i == 0:
            z = np.sqrt(2.0 * m + 1.0) - 1.85575 * (2.0 * m + 1.0) ** (-1.0 / 6.0)
        elif i == 1:
            z -= 1.14 * m ** 0.426 / z
        elif i == 2:
            z = 1.86 * z - 0.86 * x[0]
        elif i == 3:
            z = 1.91 * z - 0.91 * x[1]
        else:
            z = 2.0 * z - x[i - 2]
        for _ in range(100):
            # orthonormal recurrence: p_{j+1} = z*sqrt(2/(j+1))*p_j - sqrt(j/(j+1))*p_{j-1}
            p1 = np.pi ** -0.25
            p2 = 0.0
            for j in range(m):
                p3 = p2
                p2 = p1
                p1 = z * np.sqrt(2.0 / (j + 1)) * p2 - np.sqrt(j / (j + 1.0)) * p3
            pp = np.sqrt(2.0 * m) * p2
            dz = p1 / pp
            z -= dz
            if abs(dz) < 1e-15:
                break
        x[i] = z
        x[m - 1 - i] = -z
        w[i] = 2.0 / (pp * pp)
        w[m - 1 - i] = w[i]
    return x[::-1].copy(), w[::-1].copy()


@dataclass(frozen=True, eq=False)
class GaussHermiteRule:
    """Nodes and weights for integrals of the form ``int f(x) exp(-x^2) dx``.

    Immutable and shareable across workers.  ``integrate(g)`` evaluates
    ``int g(x) dx`` by weighting with ``exp(x^2)`` at the nodes, which is
    the form the BER expectations take after the log substitution.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    @lru_cache(maxsize=16)
    def build(cls, order: int = 40) -> "GaussHermiteRule":
        if order < 1:
            raise ValueError("rule order must be positive")
        nodes, weights = _hermite_newton(order)
        rule = cls(order=order, nodes=nodes, weights=weights)
        total = rule.weights.sum()
        if abs(total - np.sqrt(np.pi)) > 1e-12 * np.sqrt(np.pi):
            raise AssertionError("Hermite weights failed the sqrt(pi) sum check")
        return rule

    def integrate_weighted(self, f) -> float:
        """``int f(x) exp(-x^2) dx`` with f vectorized over the nodes."""
        return float(np.dot(self.weights, f(self.nodes)))

    def integrate(self, g) -> float:
        """``int g(x) dx`` for g that decays fast enough off the node span."""
        return float(np.dot(self.weights, g(self.nodes) * np.exp(self.nodes ** 2)))
