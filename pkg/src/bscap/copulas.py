"""Bivariate copulas: FGM, Frank, independence and the Frechet-Hoeffding bounds.

Each copula exposes its CDF, its density (when it has one), the conditional
CDF ``h(u1, u2) = dC/du1`` and the inverse of that conditional CDF, which is
what the sampler uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedVariantError


def _unit(*us):
    out = []
    for u in us:
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
            raise DomainError("copula arguments must lie in [0, 1]")
        out.append(u)
    return out


def _ret(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(out)
    return out


class Copula:
    """Common interface; subclasses fill in the variant-specific formulas."""

    has_density = True

    @property
    def tag(self) -> str:
        raise NotImplementedError

    def cdf(self, u1, u2):
        u1, u2 = _unit(u1, u2)
        out = self._cdf(u1, u2)
        # pin the grounding/uniform-margin identities to exact values
        out = np.where(u2 == 1.0, u1, np.where(u1 == 1.0, u2, out))
        out = np.where((u1 == 0.0) | (u2 == 0.0), 0.0, out)
        return _ret(out, u1, u2)

    def density(self, u1, u2):
        if not self.has_density:
            raise UnsupportedVariantError(f"{type(self).__name__} copula is singular and has no density")
        u1, u2 = _unit(u1, u2)
        return _ret(self._density(u1, u2), u1, u2)

    def h(self, u1, u2):
        """Conditional CDF P(U2 <= u2 | U1 = u1)."""
        u1, u2 = _unit(u1, u2)
        return _ret(self._h(u1, u2), u1, u2)

    def conditional_quantile(self, u1, w):
        """u2 such that h(u1, u2) = w."""
        u1, w = _unit(u1, w)
        return _ret(np.clip(self._hinv(u1, w), 0.0, 1.0), u1, w)

    def sample_pair(self, u, w):
        """Map two independent uniforms to a pair with joint CDF ``self.cdf``."""
        return u, self.conditional_quantile(u, w)

    def ridge(self, u1):
        """Where, along u2, the mass given u1 concentrates (None if diffuse)."""
        return None

    # ``density_scale`` bounds ln(sup c) for integration-range truncation
    density_scale = 0.0

    def _density_tails(self, u1, u2, v1, v2):
        """Density given u and the accurately computed complements v = 1 - u."""
        return self._density(u1, u2)


@dataclass(frozen=True)
class Independence(Copula):
    @property
    def tag(self):
        return "independent"

    def _cdf(self, u1, u2):
        return u1 * u2

    def _density(self, u1, u2):
        return np.ones(np.broadcast(u1, u2).shape)

    def _h(self, u1, u2):
        return np.broadcast_to(u2, np.broadcast(u1, u2).shape).astype(float)

    def _hinv(self, u1, w):
        return np.broadcast_to(w, np.broadcast(u1, w).shape).astype(float)


@dataclass(frozen=True)
class FGM(Copula):
    """Farlie-Gumbel-Morgenstern copula u1 u2 (1 + theta (1-u1)(1-u2))."""

    theta: float

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise DomainError(f"FGM theta must lie in [-1, 1], got {self.theta}")

    @property
    def tag(self):
        return f"fgm:{self.theta:g}"

    @property
    def density_scale(self):
        return float(np.log1p(abs(self.theta)))

    def _cdf(self, u1, u2):
        return u1 * u2 * (1.0 + self.theta * (1.0 - u1) * (1.0 - u2))

    def _density(self, u1, u2):
        return 1.0 + self.theta * (2.0 * u1 - 1.0) * (2.0 * u2 - 1.0)

    def _density_tails(self, u1, u2, v1, v2):
        # 1 + sign (u1 - v1)(u2 - v2) collapses to a sum of non-negative products,
        # so the density keeps full relative accuracy near the corners where it vanishes
        t = self.theta
        agree = u1 * u2 + v1 * v2
        cross = u1 * v2 + v1 * u2
        return (1.0 - abs(t)) + 2.0 * abs(t) * (agree if t >= 0 else cross)

    def _h(self, u1, u2):
        return u2 * (1.0 + self.theta * (1.0 - 2.0 * u1) * (1.0 - u2))

    def _hinv(self, u1, w):
        # root in [0, 1] of b u2^2 - (1 + b) u2 + w = 0, cancellation-free form
        b = self.theta * (1.0 - 2.0 * u1)
        disc = np.maximum((1.0 + b) ** 2 - 4.0 * b * w, 0.0)
        return 2.0 * w / ((1.0 + b) + np.sqrt(disc))


@dataclass(frozen=True)
class Frank(Copula):
    """Frank copula -(1/a) ln(1 + (e^{-a u1}-1)(e^{-a u2}-1)/(e^{-a}-1)).

    Positive ``alpha`` gives positive dependence.  Negative ``alpha`` is
    evaluated through the reflection C_{-a}(u, v) = u - C_a(u, 1 - v), so
    only non-positive exponents are ever exponentiated.
    """

    alpha: float

    def __post_init__(self):
        if self.alpha == 0 or not np.isfinite(self.alpha):
            raise DomainError("Frank alpha must be finite and non-zero")

    @property
    def tag(self):
        return f"frank:{self.alpha:g}"

    @property
    def density_scale(self):
        return float(np.log1p(abs(self.alpha)))

    # --- alpha > 0 kernels -------------------------------------------------
    @staticmethod
    def _gap(a, u1, u2):
        # (1 - e^{-a}) - (1 - e^{-a u1})(1 - e^{-a u2}), written as two positive terms
        return np.exp(-a * u1) * -np.expm1(-a * u2) + np.exp(-a * u2) * -np.expm1(-a * (1.0 - u2))

    def _cdf_pos(self, a, u1, u2):
        x = np.expm1(-a * u1) * np.expm1(-a * u2) / np.expm1(-a)
        with np.errstate(divide="ignore"):
            big = -np.log(self._gap(a, u1, u2) / -np.expm1(-a)) / a
        return np.where(np.abs(x) < 0.5, -np.log1p(x) / a, big)

    def _density_pos(self, a, u1, u2):
        gap = self._gap(a, u1, u2)
        return a * -np.expm1(-a) * np.exp(-a * (u1 + u2)) / (gap * gap)

    def _h_pos(self, a, u1, u2):
        return np.exp(-a * u1) * -np.expm1(-a * u2) / self._gap(a, u1, u2)

    def _hinv_pos(self, a, u1, w):
        # u2 = -ln(1 + x) / a; near 1 + x = 0 use the cancellation-free ratio for 1 + x
        e = np.exp(-a * u1) * (1.0 - w)
        x = w * np.expm1(-a) / (w + e)
        with np.errstate(divide="ignore"):
            ratio = (e + w * np.exp(-a)) / (w + e)
            return np.where(np.abs(x) < 0.5, -np.log1p(x), -np.log(ratio)) / a

    # --- dispatch on the sign of alpha ---------------------------------------
    def _cdf(self, u1, u2):
        a = self.alpha
        if a > 0:
            return self._cdf_pos(a, u1, u2)
        return np.maximum(u1 - self._cdf_pos(-a, u1, 1.0 - u2), 0.0)

    def _density(self, u1, u2):
        a = self.alpha
        return self._density_pos(a, u1, u2) if a > 0 else self._density_pos(-a, u1, 1.0 - u2)

    def _h(self, u1, u2):
        a = self.alpha
        return self._h_pos(a, u1, u2) if a > 0 else 1.0 - self._h_pos(-a, u1, 1.0 - u2)

    def _hinv(self, u1, w):
        a = self.alpha
        return self._hinv_pos(a, u1, w) if a > 0 else 1.0 - self._hinv_pos(-a, u1, 1.0 - w)

    def ridge(self, u1):
        return u1 if self.alpha > 0 else 1.0 - u1


@dataclass(frozen=True)
class Comonotone(Copula):
    """Upper Frechet-Hoeffding bound min(u1, u2)."""

    has_density = False

    @property
    def tag(self):
        return "comonotone"

    def _cdf(self, u1, u2):
        return np.minimum(u1, u2)

    def _h(self, u1, u2):
        return (u2 >= u1).astype(float)

    def _hinv(self, u1, w):
        return np.broadcast_to(u1, np.broadcast(u1, w).shape).astype(float)

    def ridge(self, u1):
        return u1


@dataclass(frozen=True)
class Countermonotone(Copula):
    """Lower Frechet-Hoeffding bound max(u1 + u2 - 1, 0)."""

    has_density = False

    @property
    def tag(self):
        return "countermonotone"

    def _cdf(self, u1, u2):
        return np.maximum(u1 + u2 - 1.0, 0.0)

    def _h(self, u1, u2):
        return (u2 >= 1.0 - u1).astype(float)

    def _hinv(self, u1, w):
        return np.broadcast_to(1.0 - u1, np.broadcast(u1, w).shape).astype(float)

    def ridge(self, u1):
        return 1.0 - u1


def parse_copula(tag: str) -> Copula:
    """Build a copula from a CLI-style tag such as ``fgm:0.5`` or ``frank:-30``."""
    name, _, arg = tag.strip().partition(":")
    name = name.lower()
    try:
        if name == "fgm":
            return FGM(float(arg))
        if name == "frank":
            return Frank(float(arg))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad parameter in dependence tag {tag!r}") from exc
    if arg:
        raise DomainError(f"dependence tag {tag!r} takes no parameter")
    simple = {"independent": Independence, "independence": Independence,
              "comonotone": Comonotone, "countermonotone": Countermonotone}
    if name in simple:
        return simple[name]()
    raise DomainError(f"unknown copula tag {tag!r}")
