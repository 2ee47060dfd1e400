"""Unit-mean Gamma law of a Nakagami-m power gain g = |h|^2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import specfun
from .errors import DomainError

# p = 1 is clipped here so countermonotone sampling never sees an infinite gain
QUANTILE_P_MAX = 1.0 - 1e-16


def _ret(out, x):
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class FadingMarginal:
    """Gamma(shape=m, rate=m) power gain: E[g] = 1, Var[g] = 1/m."""

    m: float

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise DomainError(f"fading severity m must be positive, got {self.m}")

    @property
    def mean(self):
        return 1.0

    @property
    def variance(self):
        return 1.0 / self.m

    def logpdf(self, g):
        g = np.asarray(g, dtype=float)
        m = self.m
        with np.errstate(divide="ignore", invalid="ignore"):
            out = m * np.log(m) + (m - 1.0) * np.log(g) - m * g - sc.gammaln(m)
        if m == 1.0:
            out = np.where(g == 0, 0.0, out)
        out = np.where(g < 0, -np.inf, out)
        return _ret(out, g)

    def pdf(self, g):
        """m^m g^(m-1) exp(-m g) / Gamma(m); zero for g < 0."""
        return _ret(np.exp(self.logpdf(g)), g)

    def cdf(self, g):
        g = np.asarray(g, dtype=float)
        return _ret(specfun.gammainc_lower_reg(self.m, self.m * np.maximum(g, 0.0)), g)

    def sf(self, g):
        """Survival function 1 - cdf(g), accurate in the upper tail."""
        g = np.asarray(g, dtype=float)
        return _ret(specfun.gammainc_upper_reg(self.m, self.m * np.maximum(g, 0.0)), g)

    def quantile(self, p):
        """Inverse CDF; p = 1 maps to the finite cap at 1 - 1e-16."""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("quantile requires 0 <= p <= 1")
        p = np.minimum(p, QUANTILE_P_MAX)
        return _ret(specfun.gammainc_inv(self.m, p) / self.m, p)

    def isf(self, q):
        """Inverse survival function, i.e. quantile(1 - q) without rounding 1 - q."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise DomainError("isf requires 0 <= q <= 1")
        # only q = 0 needs guarding; the upper tail is resolved down to the smallest normal
        q = np.maximum(q, np.finfo(float).tiny)
        return _ret(specfun.gammaincc_inv(self.m, q) / self.m, q)

    def sample(self, u):
        """Inverse-transform draw, so a copula coupling carries over exactly."""
        return self.quantile(u)

    def mirror(self, g):
        """Gain with the complementary probability: quantile(sf(g))."""
        g = np.asarray(g, dtype=float)
        p = self.cdf(g)
        q = self.sf(g)
        # invert whichever tail holds the smaller mass
        with np.errstate(invalid="ignore"):
            out = np.where(q < 0.5, self.quantile(q), self.isf(np.asarray(p)))
        return _ret(out, g)

    def integrated_cdf(self, w):
        """Integral of the CDF over [0, w] = w P(m, m w) - P(m + 1, m w)."""
        w = np.asarray(w, dtype=float)
        x = self.m * w
        out = w * sc.gammainc(self.m, x) - sc.gammainc(self.m + 1.0, x)
        return _ret(np.maximum(out, 0.0), w)

    def stop_loss(self, w):
        """Integral of the survival function over [w, inf) = E[(g - w)^+]."""
        w = np.asarray(w, dtype=float)
        x = self.m * w
        out = sc.gammaincc(self.m + 1.0, x) - w * sc.gammaincc(self.m, x)
        return _ret(np.maximum(out, 0.0), w)
