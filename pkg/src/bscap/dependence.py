"""Pearson correlation of the two fading powers induced by a copula.

For Gamma(m, m) marginals the Hoeffding covariance identity gives

    rho = m * int int (C(F(g_f), F(g_b)) - F(g_f) F(g_b)) dg_f dg_b,

which only needs the copula CDF and so also covers the singular
Frechet-Hoeffding extremes.  The attainable range of rho is bounded by the
comonotone and countermonotone copulas; those bounds also admit 1-D forms
with the inner integral written in incomplete gammas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

from . import specfun
from .copulas import FGM, Comonotone, Copula, Countermonotone
from .errors import ConvergenceError, DomainError
from .marginals import FadingMarginal
from .quadrature import gauss_legendre, trapezoid

log = logging.getLogger(__name__)

_TAIL = 46.0
# discrepancy threshold for reporting the literal closed-form upper bound
DISCREPANCY_TOL = 1e-3


@dataclass(frozen=True)
class CorrelationReport:
    rho: float
    method: str
    err_estimate: float

    def __post_init__(self):
        if abs(self.rho) > 1.0 + self.err_estimate + 1e-9:
            raise ConvergenceError(f"correlation {self.rho} outside [-1, 1]", value=self.rho,
                                   error=self.err_estimate)


def _check_m(m):
    if not (np.isfinite(m) and m > 0):
        raise DomainError(f"m must be positive, got {m}")
    return float(m)


def _log_span(m):
    # ln g range outside which F(g) ~ g^m or 1 - F(g) ~ e^{-m g} is below e^-46
    return -(_TAIL + 4.0) / (m + 1.0) - 2.0, math.log((_TAIL + 14.0) / m + 6.0)


def _graded_offsets(span, first=2e-3, ratio=1.4):
    out = [0.0, first]
    while out[-1] < span:
        out.append(out[-1] * ratio)
    out[-1] = span
    return np.array(out)


def _inner_panels(t_split, lo, hi, order):
    """GL nodes (rows = outer points) clustered geometrically around t_split."""
    nodes, weights = gauss_legendre(order)
    left = _graded_offsets(1.0)
    # the same relative grading for every row; scale by distance to each end
    xs, ws = [], []
    for side, end in ((-1.0, lo), (1.0, hi)):
        span = np.abs(end - t_split)[:, None]
        edges = t_split[:, None] + side * span * left[None, :]
        a, b = edges[:, :-1], edges[:, 1:]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        xs.append(mid[:, :, None] + half[:, :, None] * nodes[None, None, :])
        ws.append(np.abs(half)[:, :, None] * weights[None, None, :])
    x = np.concatenate([xs[0].reshape(len(t_split), -1), xs[1].reshape(len(t_split), -1)], axis=1)
    w = np.concatenate([ws[0].reshape(len(t_split), -1), ws[1].reshape(len(t_split), -1)], axis=1)
    return x, w


def _hoeffding_inner(copula, marg, t_f, lo, hi, order):
    u1 = marg.cdf(np.exp(t_f))
    ridge = copula.ridge(u1)
    if ridge is None:
        t_split = np.full(t_f.shape, 0.5 * (lo + hi))
    else:
        g_r = marg.quantile(np.clip(ridge, 0.0, 1.0))
        with np.errstate(divide="ignore"):
            t_split = np.clip(np.log(g_r), lo + 1e-3, hi - 1e-3)
    x, w = _inner_panels(t_split, lo, hi, order)
    g_b = np.exp(x)
    u2 = marg.cdf(g_b)
    diff = copula._cdf(u1[:, None], u2) - u1[:, None] * u2
    return (diff * g_b * w).sum(axis=1)


def _hoeffding(copula, m, rel_tol):
    marg = FadingMarginal(m)
    lo, hi = _log_span(m)
    errs = {}

    def outer(t_f):
        fine = _hoeffding_inner(copula, marg, t_f, lo, hi, 20)
        coarse = _hoeffding_inner(copula, marg, t_f, lo, hi, 12)
        g_f = np.exp(t_f)
        errs[t_f.size, float(t_f[0])] = np.abs(fine - coarse) * g_f
        return fine * g_f

    res = trapezoid(outer, lo, hi, h0=0.25, rel_tol=rel_tol, abs_tol=1e-15, min_levels=2)
    # inner errors integrated with the final trapezoid step
    step = (hi - lo) / (res.n_nodes - 1)
    inner_err = step * sum(float(e.sum()) for e in errs.values())
    return m * res.value, m * (res.error + inner_err)


@lru_cache(maxsize=512)
def _pearson_cached(copula, m, rel_tol):
    value, err = _hoeffding(copula, m, rel_tol)
    return CorrelationReport(float(value), "hoeffding-quadrature", float(err))


def pearson_from_copula(copula: Copula, m, rel_tol=1e-11) -> CorrelationReport:
    """Pearson correlation of (g_f, g_b) under ``copula`` with Gamma(m) marginals."""
    return _pearson_cached(copula, _check_m(m), rel_tol)


# ---------------------------------------------------------------------------
# bounds with the inner integral in closed form
# ---------------------------------------------------------------------------

def _chi(g_f, g_b, m):
    # (Gamma(m+1, m g_b) - m g_b Gamma(m, m g_b)) (Gamma(m) - lower(m, m g_f)) / (m Gamma(m)^2)
    return (sc.gammaincc(m + 1.0, m * g_b) - g_b * sc.gammaincc(m, m * g_b)) * sc.gammaincc(m, m * g_f)


def _kappa(g_f, g_b, m):
    # (m g_b Gamma(m) - m g_b Gamma(m, m g_b) + Gamma(m+1, m g_b)) lower(m, m g_f) / (m Gamma(m)^2)
    return (g_b - g_b * sc.gammaincc(m, m * g_b) + sc.gammaincc(m + 1.0, m * g_b)) * sc.gammainc(m, m * g_f)


def _line(integrand, m, rel_tol):
    lo, hi = _log_span(m)
    res = trapezoid(lambda t: integrand(np.exp(t)) * np.exp(t), lo, hi, h0=0.25,
                    rel_tol=rel_tol, abs_tol=1e-15, min_levels=2)
    return res.value, res.error


@lru_cache(maxsize=256)
def rho_upper(m) -> float:
    """Largest attainable correlation: 2m int F_bar(g_f) int_0^{g_f} F(g_b) dg_b dg_f."""
    m = _check_m(m)
    marg = FadingMarginal(m)
    value, _ = _line(lambda g: 2.0 * m * marg.sf(g) * marg.integrated_cdf(g), m, 1e-12)
    return float(value)


@lru_cache(maxsize=256)
def rho_lower(m) -> float:
    """Smallest attainable correlation (countermonotone coupling).

    Evaluated as m int (-chi(g_f, w) - kappa(g_f, w) + kappa(g_f, 0)) dg_f with
    w the gain of complementary probability, w = F^{-1}(1 - F(g_f)).
    """
    m = _check_m(m)
    marg = FadingMarginal(m)

    def integrand(g):
        w = marg.mirror(g)
        return m * (-_chi(g, w, m) - _kappa(g, w, m) + _kappa(g, 0.0, m))

    value, _ = _line(integrand, m, 1e-12)
    return float(value)


def rho_lower_plus_chi(m) -> float:
    """Lower-bound integral with the +chi sign.

    Kept only for the discrepancy report; its value is positive, so it cannot bound from below.
    """
    m = _check_m(m)
    marg = FadingMarginal(m)

    def integrand(g):
        w = marg.mirror(g)
        return m * (_chi(g, w, m) - _kappa(g, w, m) + _kappa(g, 0.0, m))

    return float(_line(integrand, m, 1e-12)[0])


def rho_closed_form_upper(m) -> float:
    """Literal value of 2 - Gamma(2(m+1)) 2F1(1; -(1+m); 1+m; -1) / (Gamma(m)^2 m^2 2^{2m})."""
    m = _check_m(m)
    f = specfun.gauss_2f1(1.0, -(1.0 + m), 1.0 + m, -1.0)
    if f == 0.0:
        return 2.0
    log_mag = (specfun.ln_gamma(2.0 * (m + 1.0)) + math.log(abs(f)) - 2.0 * specfun.ln_gamma(m)
               - 2.0 * math.log(m) - 2.0 * m * math.log(2.0))
    return 2.0 - math.copysign(math.exp(log_mag), f)


@dataclass(frozen=True)
class BoundDiscrepancy:
    m: float
    closed_form: float
    quadrature: float

    @property
    def difference(self):
        return self.closed_form - self.quadrature

    @property
    def flagged(self):
        return abs(self.difference) > DISCREPANCY_TOL


def upper_bound_discrepancy(m) -> BoundDiscrepancy:
    """Side-by-side literal closed form vs quadrature for the upper bound."""
    report = BoundDiscrepancy(float(m), rho_closed_form_upper(m), rho_upper(m))
    if report.flagged:
        log.warning("upper correlation bound at m=%g: closed form %.6g vs quadrature %.6g",
                    m, report.closed_form, report.quadrature)
    return report


def fgm_rho_range(m):
    """(rho(theta=-1), rho(theta=+1)) for the FGM family."""
    return (pearson_from_copula(FGM(-1.0), m).rho, pearson_from_copula(FGM(1.0), m).rho)


def capacity_feasibility_bound(m) -> float:
    """Correlation below which the low-SNR capacity law would turn negative."""
    return -min(1.0, _check_m(m))


def bound_report(copula: Copula, m) -> CorrelationReport:
    """Correlation for the extreme copulas via their 1-D forms, else the 2-D integral."""
    if isinstance(copula, Comonotone):
        return CorrelationReport(rho_upper(m), "closed-form", 1e-10)
    if isinstance(copula, Countermonotone):
        return CorrelationReport(rho_lower(m), "closed-form", 1e-10)
    return pearson_from_copula(copula, m)
