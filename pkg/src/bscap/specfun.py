"""Special functions used by the SNR and capacity formulas.

Gamma-family and Bessel functions are thin, domain-checked wrappers over
:mod:`scipy.special` (Cephes/AMOS kernels).  The Gauss hypergeometric
function is evaluated here directly because the formulas only need it at
terminating or small-argument points, where a plain series with a Pfaff
transformation is exact to rounding.

All functions accept scalars or array-likes; scalar input gives a Python
float back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import ConvergenceError, DomainError

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "ln_gamma",
    "digamma",
    "gammainc_lower_reg",
    "gammainc_upper_reg",
    "gammainc_upper",
    "gammainc_inv",
    "gammaincc_inv",
    "bessel_k",
    "bessel_k_scaled",
    "log_bessel_k",
    "bessel_i",
    "log_bessel_i",
    "gauss_2f1",
]


@dataclass(frozen=True)
class Accuracy:
    """Tolerance bundle for iterative evaluations."""

    rel_tol: float = 1e-14
    abs_tol: float = 0.0
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be non-negative, got {self.abs_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_ACCURACY = Accuracy()


def _ret(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(out)
    return out


def _require(cond, message):
    if not np.all(cond):
        raise DomainError(message)


def ln_gamma(x):
    """Natural log of the Gamma function for x > 0."""
    x = np.asarray(x, dtype=float)
    _require(x > 0, "ln_gamma requires x > 0")
    return _ret(sc.gammaln(x), x)


def digamma(x):
    """Digamma function psi(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    _require(x > 0, "digamma requires x > 0")
    return _ret(sc.psi(x), x)


def _check_inc(a, x):
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(a > 0, "incomplete gamma requires a > 0")
    _require(x >= 0, "incomplete gamma requires x >= 0")
    return a, x


def gammainc_lower_reg(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    a, x = _check_inc(a, x)
    return _ret(sc.gammainc(a, x), a, x)


def gammainc_upper_reg(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    a, x = _check_inc(a, x)
    return _ret(sc.gammaincc(a, x), a, x)


def gammainc_upper(a, x):
    """Non-regularized upper incomplete gamma Gamma(a, x)."""
    a, x = _check_inc(a, x)
    return _ret(sc.gammaincc(a, x) * sc.gamma(a), a, x)


def gammainc_inv(a, p):
    """Inverse of P(a, .) in its second argument.

    ``p = 0`` maps to 0 and ``p = 1`` to ``inf``.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    _require(a > 0, "gammainc_inv requires a > 0")
    _require((p >= 0) & (p <= 1), "gammainc_inv requires 0 <= p <= 1")
    return _ret(sc.gammaincinv(a, p), a, p)


def gammaincc_inv(a, q):
    """Inverse of Q(a, .); accurate when the upper tail mass q is small."""
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    _require(a > 0, "gammaincc_inv requires a > 0")
    _require((q >= 0) & (q <= 1), "gammaincc_inv requires 0 <= q <= 1")
    return _ret(sc.gammainccinv(a, q), a, q)


def bessel_k(v, x):
    """Modified Bessel function of the second kind K_v(x), x > 0."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(x > 0, "bessel_k requires x > 0")
    return _ret(sc.kv(np.abs(v), x), v, x)


def bessel_k_scaled(v, x):
    """exp(x) * K_v(x); stays finite where K_v underflows."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(x > 0, "bessel_k_scaled requires x > 0")
    return _ret(sc.kve(np.abs(v), x), v, x)


def log_bessel_k(v, x):
    """ln K_v(x) computed from the exponentially scaled kernel."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(x > 0, "log_bessel_k requires x > 0")
    return _ret(np.log(sc.kve(np.abs(v), x)) - x, v, x)


def bessel_i(v, x):
    """Modified Bessel function of the first kind I_v(x), v > -1, x >= 0.

    Raises OverflowError where I_v(x) is not representable; use
    :func:`log_bessel_i` there.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(v > -1, "bessel_i requires v > -1")
    _require(x >= 0, "bessel_i requires x >= 0")
    out = sc.iv(v, x)
    if np.any(np.isinf(out) & np.isfinite(x)):
        raise OverflowError("I_v(x) overflows; use log_bessel_i")
    return _ret(out, v, x)


def log_bessel_i(v, x):
    """ln I_v(x) for v > -1, x >= 0, without overflow or underflow."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _require(v > -1, "log_bessel_i requires v > -1")
    _require(x >= 0, "log_bessel_i requires x >= 0")
    v, x = np.broadcast_arrays(v, x)
    with np.errstate(divide="ignore"):
        out = np.log(sc.ive(v, x)) + x
        small = x < 1e-3
        if np.any(small):
            # three-term ascending series; the fourth term is < 1e-20 relative
            vs, xs = v[small], x[small]
            t = 0.25 * xs * xs
            head = vs * np.log(0.5 * xs) - sc.gammaln(vs + 1.0)
            out = np.array(out, dtype=float)
            out[small] = head + np.log1p(t / (vs + 1.0) + t * t / (2.0 * (vs + 1.0) * (vs + 2.0)))
    return _ret(out, v, x)


def _is_nonpos_int(x):
    return x <= 0 and float(x).is_integer()


def _series_2f1(a, b, c, z, acc, n_terms=None):
    """Partial sums of the hypergeometric series; exact length if n_terms."""
    term = 1.0
    terms = [1.0]
    running = 1.0
    limit = acc.max_iter if n_terms is None else n_terms
    quiet = 0
    for k in range(limit):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        terms.append(term)
        running += term
        if n_terms is not None:
            continue
        if abs(term) <= acc.rel_tol * abs(running) + acc.abs_tol:
            quiet += 1
            # two consecutive negligible terms guard against a lone small one
            if quiet >= 2 or term == 0.0:
                return math.fsum(terms)
        else:
            quiet = 0
    if n_terms is not None:
        return math.fsum(terms)
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) series did not converge in {acc.max_iter} terms",
        value=math.fsum(terms),
        error=abs(term),
    )


def gauss_2f1(a, b, c, z, acc: Accuracy = DEFAULT_ACCURACY):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real arguments.

    Terminating series (a or b a non-positive integer) are summed in full
    for any z.  Otherwise z must satisfy z < 1; z below -1/2 goes through
    the Pfaff transformation, which maps it into (1/3, 1) where the series
    converges.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpos_int(c):
        raise DomainError("2F1 undefined for c a non-positive integer")
    if z == 0.0:
        return 1.0
    for top in (a, b):
        if _is_nonpos_int(top):
            return _series_2f1(a, b, c, z, acc, n_terms=int(-top))
    if z >= 1.0:
        raise ConvergenceError(f"2F1 series diverges for z = {z} >= 1")
    if z < -0.5:
        w = z / (z - 1.0)
        # prefer the Pfaff branch that terminates, if either does
        if _is_nonpos_int(c - a):
            return (1.0 - z) ** (-b) * _series_2f1(c - a, b, c, w, acc, n_terms=int(a - c))
        if _is_nonpos_int(c - b):
            return (1.0 - z) ** (-a) * _series_2f1(a, c - b, c, w, acc, n_terms=int(b - c))
        return (1.0 - z) ** (-a) * _series_2f1(a, c - b, c, w, acc)
    return _series_2f1(a, b, c, z, acc)
