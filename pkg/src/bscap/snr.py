"""Distribution of the reader SNR gamma = gamma_hat * g_f * g_b.

Three routes to the density are provided:

* :func:`pdf_general` integrates the copula density against the Gamma
  marginals (works for any absolutely continuous copula and any m > 0);
* :func:`pdf_fgm_closed` is the finite Bessel-K sum for the FGM copula with
  integer m;
* :func:`pdf_kibble` is the linear-correlation model built on Kibble's
  bivariate Gamma law.

Internally everything is expressed through the product Y = g_f g_b, whose
density does not depend on gamma_hat; ``f_gamma(x) = f_Y(x / gamma_hat) /
gamma_hat`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special as sc

from . import specfun
from .copulas import Comonotone, Copula, Countermonotone, FGM, Independence, parse_copula
from .errors import DomainError, UnsupportedVariantError
from .marginals import FadingMarginal
from .quadrature import panel_nodes, refine_edges, trapezoid
from .units import db_to_linear

# exponent budget for truncating integrands: e^-46 ~ 1e-20
_TAIL_LOG = 46.0
# below this correlation the Kibble form is replaced by its rho -> 0 limit
KIBBLE_RHO_FLOOR = 1e-8
_ROW_CHUNK = 256


@dataclass(frozen=True)
class LinearRho:
    """Linear (Pearson) power correlation under Kibble's bivariate Gamma law."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"linear correlation must lie in [0, 1), got {self.rho}")

    @property
    def tag(self):
        return f"linear:{self.rho:g}"


Dependence = Union[Copula, LinearRho]


def parse_dependence(tag: str) -> Dependence:
    """Parse ``linear:0.5`` or any copula tag understood by parse_copula."""
    name, _, arg = tag.strip().partition(":")
    if name.lower() == "linear":
        try:
            return LinearRho(float(arg))
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"bad parameter in dependence tag {tag!r}") from exc
    return parse_copula(tag)


@dataclass(frozen=True)
class SnrModel:
    marginal: FadingMarginal
    dependence: Dependence
    snr_hat: float

    def __post_init__(self):
        if not (np.isfinite(self.snr_hat) and self.snr_hat > 0):
            raise DomainError(f"snr_hat must be positive, got {self.snr_hat}")

    @classmethod
    def build(cls, m, dependence, snr_hat=None, snr_hat_db=None):
        """Convenience constructor; ``dependence`` may be a tag string."""
        if (snr_hat is None) == (snr_hat_db is None):
            raise DomainError("give exactly one of snr_hat, snr_hat_db")
        if isinstance(dependence, str):
            dependence = parse_dependence(dependence)
        if snr_hat is None:
            snr_hat = db_to_linear(snr_hat_db)
        return cls(FadingMarginal(float(m)), dependence, float(snr_hat))

    @property
    def m(self):
        return self.marginal.m

    def with_snr_hat(self, snr_hat):
        return SnrModel(self.marginal, self.dependence, float(snr_hat))

    @property
    def mean_snr(self):
        """gamma_bar = gamma_hat (m + rho) / m; only known a priori for LinearRho."""
        if isinstance(self.dependence, LinearRho):
            return self.snr_hat * (self.m + self.dependence.rho) / self.m
        raise UnsupportedVariantError("mean SNR of a copula model needs dependence.pearson_from_copula")


# ---------------------------------------------------------------------------
# log-density kernels of the product Y = g_f g_b (unit gamma_hat)
# ---------------------------------------------------------------------------

def _log_independent(y, m):
    # f_Y(y) = 2 m^{2m} y^{m-1} K_0(2 m sqrt(y)) / Gamma(m)^2
    z = 2.0 * m * np.sqrt(y)
    return (np.log(2.0) + 2.0 * m * np.log(m) + (m - 1.0) * np.log(y)
            - 2.0 * sc.gammaln(m) + np.log(sc.kve(0, z)) - z)


def _log_general_rows(y, copula, m, rel_tol):
    # g_f = sqrt(y) e^tau turns the product integral into
    #   f_Y(y) = m^{2m} y^{m-1} / Gamma(m)^2 * int exp(-z cosh tau) c(u1, u2) dtau
    # with z = 2 m sqrt(y); tau is rescaled per row onto [-1, 1].
    sq = np.sqrt(y)
    z = 2.0 * m * sq
    budget = _TAIL_LOG + copula.density_scale
    tmax = np.arccosh(1.0 + budget / z)

    def integrand(x):
        tau = tmax[:, None] * x[None, :]
        x1 = m * sq[:, None] * np.exp(tau)
        x2 = m * sq[:, None] * np.exp(-tau)
        u1, u2 = sc.gammainc(m, x1), sc.gammainc(m, x2)
        v1, v2 = sc.gammaincc(m, x1), sc.gammaincc(m, x2)
        sh = np.sinh(0.5 * tau)
        # cosh(tau) - 1 = 2 sinh^2(tau / 2) without cancellation
        weight = np.exp(-2.0 * z[:, None] * sh * sh)
        return weight * copula._density_tails(u1, u2, v1, v2)

    res = trapezoid(integrand, -1.0, 1.0, h0=0.125, rel_tol=rel_tol, min_levels=2, max_levels=11)
    j = tmax * res.value
    return (2.0 * m * np.log(m) + (m - 1.0) * np.log(y) - 2.0 * sc.gammaln(m)
            - z + np.log(j))


def log_product_pdf_general(y, copula: Copula, m, rel_tol=1e-12):
    """ln f_Y(y) by integrating the copula density against the marginals."""
    if not copula.has_density:
        raise UnsupportedVariantError(f"{type(copula).__name__} copula has no density")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty(y.shape)
    flat_y, flat_out = y.ravel(), out.reshape(-1)
    for i in range(0, flat_y.size, _ROW_CHUNK):
        flat_out[i:i + _ROW_CHUNK] = _log_general_rows(flat_y[i:i + _ROW_CHUNK], copula, m, rel_tol)
    return out


def log_product_pdf_fgm(y, theta, m):
    """ln f_Y(y) from the finite Bessel-K sum for the FGM copula (integer m)."""
    if not (float(m).is_integer() and m >= 1):
        raise DomainError("the FGM closed form needs a positive integer m; use pdf_general")
    m = int(m)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = 2.0 * m * np.sqrt(y)
    r2 = np.sqrt(2.0)
    k0 = sc.kve(0, z)
    # every K term is carried with exp(-z) factored out
    s1 = np.zeros(z.shape)
    for k in range(m):
        coef = 2.0 ** (2.0 - 0.5 * k) / sc.factorial(k)
        s1 += coef * (0.5 * z) ** k * sc.kve(k, r2 * z) * np.exp(-(r2 - 1.0) * z)
    s2 = np.zeros(z.shape)
    for k in range(m):
        for n in range(m):
            coef = 4.0 / (sc.factorial(k) * sc.factorial(n))
            s2 += coef * (0.5 * z) ** (k + n) * sc.kve(abs(n - k), 2.0 * z) * np.exp(-z)
    bracket = k0 + theta * (k0 - s1 + s2)
    with np.errstate(divide="ignore"):
        return (np.log(2.0) + 2.0 * m * np.log(m) - 2.0 * sc.gammaln(m)
                + (m - 1.0) * np.log(y) - z + np.log(np.maximum(bracket, 0.0)))


def log_product_pdf_kibble(y, rho, m):
    """ln f_Y(y) under Kibble's bivariate Gamma law with power correlation rho."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"Kibble correlation must lie in [0, 1), got {rho}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if rho < KIBBLE_RHO_FLOOR:
        return _log_independent(y, m)
    a = 2.0 * m * np.sqrt(y) / (1.0 - rho)
    log_d = (np.log(2.0) + (m + 1.0) * np.log(m) - np.log1p(-rho)
             - 0.5 * (m - 1.0) * np.log(rho) - sc.gammaln(m))
    return (log_d + 0.5 * (m - 1.0) * np.log(y)
            + specfun.log_bessel_i(m - 1.0, a * np.sqrt(rho)) + np.log(sc.kve(0, a)) - a)


def _log_comonotone(y, m):
    # Y = G^2 exactly: f_Y(y) = f_G(sqrt y) / (2 sqrt y)
    marg = FadingMarginal(m)
    r = np.sqrt(y)
    return marg.logpdf(r) - np.log(2.0 * r)


def _resolve_method(dependence, m, method):
    if method not in ("auto", "general", "closed"):
        raise DomainError(f"unknown pdf method {method!r}")
    if isinstance(dependence, LinearRho):
        if method == "general":
            raise UnsupportedVariantError("the linear model has no copula integral form")
        return "kibble"
    if method == "general":
        return "general"
    integer_m = float(m).is_integer() and m >= 1
    if method in ("auto", "closed") and (isinstance(dependence, Independence)
                                         or (isinstance(dependence, FGM) and dependence.theta == 0)):
        return "independent"
    if isinstance(dependence, FGM):
        if method == "closed" or integer_m:
            return "fgm"
        return "general"
    if isinstance(dependence, Comonotone) and method == "auto":
        return "comonotone"
    if method == "closed":
        raise UnsupportedVariantError(f"no closed form for {dependence.tag}")
    return "general"


def log_product_pdf(y, dependence: Dependence, m, method="auto"):
    """ln f_Y at y > 0 for any supported dependence model."""
    route = _resolve_method(dependence, m, method)
    if route == "kibble":
        return log_product_pdf_kibble(y, dependence.rho, m)
    if route == "independent":
        return _log_independent(np.atleast_1d(np.asarray(y, dtype=float)), m)
    if route == "fgm":
        return log_product_pdf_fgm(y, dependence.theta, m)
    if route == "comonotone":
        return _log_comonotone(np.atleast_1d(np.asarray(y, dtype=float)), m)
    return log_product_pdf_general(y, dependence, m)


# ---------------------------------------------------------------------------
# public densities in the gamma variable
# ---------------------------------------------------------------------------

def _zero_limit(m):
    # f_gamma(0+) for every model here: diverges for m <= 1, vanishes for m > 1
    return np.inf if m <= 1.0 else 0.0


def _density(gamma, snr_hat, m, logf):
    g = np.asarray(gamma, dtype=float)
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        out[pos] = np.exp(logf(g[pos] / snr_hat)) / snr_hat
    out[g == 0] = _zero_limit(m)
    return float(out) if g.ndim == 0 else out


def pdf_general(gamma, model: SnrModel):
    """Density of gamma from the copula-density integral (any m > 0)."""
    if not isinstance(model.dependence, Copula):
        raise UnsupportedVariantError("pdf_general needs a copula dependence")
    return _density(gamma, model.snr_hat, model.m,
                    lambda y: log_product_pdf_general(y, model.dependence, model.m))


def pdf_fgm_closed(gamma, theta, m, snr_hat):
    """FGM-copula density of gamma as a finite sum of Bessel-K terms (integer m)."""
    FGM(theta)
    if not (float(m).is_integer() and m >= 1):
        raise DomainError("the FGM closed form needs a positive integer m; use pdf_general")
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise DomainError("pdf_fgm_closed requires gamma > 0")
    return _density(g, snr_hat, m, lambda y: log_product_pdf_fgm(y, theta, m))


def pdf_kibble(gamma, rho, m, snr_hat):
    """Linear-correlation density of gamma (Kibble bivariate Gamma, 0 <= rho < 1)."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"Kibble correlation must lie in [0, 1), got {rho}")
    if not m > 0:
        raise DomainError("m must be positive")
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise DomainError("pdf_kibble requires gamma > 0")
    return _density(g, snr_hat, m, lambda y: log_product_pdf_kibble(y, rho, m))


def pdf(gamma, model: SnrModel, method="auto"):
    """Density of gamma, dispatching to the best available route.

    ``method='auto'`` uses the closed forms where they exist (FGM with
    integer m, independence, comonotone, linear) and the copula integral
    otherwise; ``'general'`` forces the integral and ``'closed'`` forbids it.
    """
    _resolve_method(model.dependence, model.m, method)
    return _density(gamma, model.snr_hat, model.m,
                    lambda y: log_product_pdf(y, model.dependence, model.m, method))


# ---------------------------------------------------------------------------
# integrals over the distribution
# ---------------------------------------------------------------------------

def log_range(m):
    """Range of s = ln y outside of which the product density carries < 1e-20."""
    # left tail bounded by ~y^{m/2} (comonotone worst case), right by exp(-m sqrt(y))
    lo = -2.0 * (_TAIL_LOG + 5.0) / m
    hi = 2.0 * np.log((_TAIL_LOG + 14.0) / m + 4.0)
    return lo, hi


@dataclass(frozen=True)
class Expectation:
    value: float
    error: float


def _singular_expectation(model, func, rel_tol):
    # functional dependence: g_b = phi(g_f), so one integral over g_f suffices
    marg = model.marginal
    m = marg.m
    phi = (lambda g: g) if isinstance(model.dependence, Comonotone) else marg.mirror

    def integrand(t):
        g = np.exp(t)
        return func(model.snr_hat * g * phi(g)) * np.exp(marg.logpdf(g) + t)

    lo = -(_TAIL_LOG + 5.0) / m
    hi = np.log((_TAIL_LOG + 14.0) / m + 4.0)
    res = trapezoid(integrand, lo, hi, h0=0.25, rel_tol=rel_tol, trim=1e-22)
    return Expectation(res.value, res.error)


def expect(model: SnrModel, func, method="auto", rel_tol=1e-10):
    """E[func(gamma)] by quadrature over ln(gamma / gamma_hat).

    ``func`` must be vectorised.  Singular copulas (comonotone,
    countermonotone) are handled through the functional relation between
    the two gains.
    """
    dep = model.dependence
    if isinstance(dep, Copula) and not dep.has_density:
        if method == "general":
            raise UnsupportedVariantError(f"{dep.tag} has no density")
        return _singular_expectation(model, func, rel_tol)
    _resolve_method(dep, model.m, method)
    lo, hi = log_range(model.m)

    def integrand(s):
        y = np.exp(s)
        return func(model.snr_hat * y) * np.exp(log_product_pdf(y, dep, model.m, method) + s)

    res = trapezoid(integrand, lo, hi, h0=0.5, rel_tol=rel_tol, trim=1e-22)
    return Expectation(res.value, res.error)


def total_mass(model: SnrModel, method="auto", rel_tol=1e-10):
    """Integral of the density over (0, inf); 1 up to quadrature error."""
    return expect(model, np.ones_like, method=method, rel_tol=rel_tol)


def _countermonotone_root(s, marg, iters=64):
    # u in (0, 1/2] with ln(q(u) q(1 - u)) = s; the product rises monotonically on (0, 1/2]
    lo = np.full(s.shape, -690.0)
    hi = np.full(s.shape, np.log(0.5))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        u = np.exp(mid)
        with np.errstate(divide="ignore"):
            val = np.log(marg.quantile(u)) + np.log(marg.isf(u))
        below = val < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(0.5 * (lo + hi))


def _singular_cdf_on_log_grid(model, s):
    marg = model.marginal
    if isinstance(model.dependence, Comonotone):
        # Y = G^2
        r = np.exp(0.5 * s)
        return marg.cdf(r), 0.5 * r * marg.pdf(r)
    # Y = q(U) q(1 - U) is symmetric in U <-> 1 - U, so P(Y <= y) = 2 u*(y)
    s_max = 2.0 * np.log(marg.quantile(0.5))
    inside = s < s_max
    F = np.ones(s.shape)
    dF = np.zeros(s.shape)
    if np.any(inside):
        u = _countermonotone_root(s[inside], marg)
        a, b = marg.quantile(u), marg.isf(u)
        # d ln y / du = 1 / (a f(a)) - 1 / (b f(b))
        slope = 1.0 / (a * marg.pdf(a)) - 1.0 / (b * marg.pdf(b))
        F[inside] = 2.0 * u
        with np.errstate(divide="ignore", invalid="ignore"):
            dF[inside] = np.where(slope > 0, 2.0 / slope, np.inf)
    return F, dF


def cdf_on_log_grid(model: SnrModel, s_points, method="auto", order=8, max_width=0.125):
    """CDF and its s-derivative at sorted points s = ln(gamma / gamma_hat).

    Integrates y f_Y(y) over s with composite Gauss-Legendre panels from the
    lower truncation point upward.  Returns ``(F, dF/ds)``.  The singular
    couplings use their exact functional forms instead.
    """
    dep = model.dependence
    s_points = np.asarray(s_points, dtype=float)
    if np.any(np.diff(s_points) < 0):
        raise ValueError("s_points must be sorted")
    if isinstance(dep, (Comonotone, Countermonotone)) and method != "general":
        return _singular_cdf_on_log_grid(model, s_points)
    _resolve_method(dep, model.m, method)
    lo, _ = log_range(model.m)
    start = min(lo, s_points[0] - 1.0)
    anchors = np.concatenate([[start], s_points])
    edges = refine_edges(anchors, max_width)
    x, w = panel_nodes(edges, order)
    f_nodes = np.exp(log_product_pdf(np.exp(x.ravel()), dep, model.m, method) + x.ravel())
    panel = (f_nodes.reshape(x.shape) * w).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    idx = np.searchsorted(edges, s_points)
    F = np.minimum(cum[idx], 1.0)
    dF = np.exp(log_product_pdf(np.exp(s_points), dep, model.m, method) + s_points)
    return F, dF


def cdf(gamma, model: SnrModel, method="auto"):
    """P(SNR <= gamma) by integrating the density; vectorised over gamma."""
    g = np.asarray(gamma, dtype=float)
    flat = np.atleast_1d(g).ravel()
    out = np.zeros(flat.shape)
    pos = flat > 0
    if np.any(np.isinf(flat) & pos):
        out[np.isinf(flat)] = 1.0
    fin = pos & np.isfinite(flat)
    if np.any(fin):
        _, hi = log_range(model.m)
        s = np.log(flat[fin] / model.snr_hat)
        clipped = np.minimum(s, hi)
        order = np.argsort(clipped, kind="stable")
        F, _ = cdf_on_log_grid(model, clipped[order], method=method)
        vals = np.empty(F.shape)
        vals[order] = F
        out[fin] = vals
    return float(out[0]) if g.ndim == 0 else out.reshape(g.shape)
