"""Ergodic capacity E[log2(1 + gamma)] and its asymptotic laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError
from .snr import SnrModel, expect

LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class CapacityResult:
    value: float
    method: str
    err_estimate: float = 0.0


def _check_m(m):
    if not (np.isfinite(m) and m > 0):
        raise DomainError(f"m must be positive, got {m}")


def _check_snr(x, name):
    if not (np.isfinite(x) and x > 0):
        raise DomainError(f"{name} must be positive, got {x}")


def capacity_quadrature(model: SnrModel, method="auto", rel_tol=1e-11) -> CapacityResult:
    """Average capacity in bps/Hz by quadrature of log2(1 + gamma) against the SNR law."""
    res = expect(model, lambda g: np.log1p(g) * LOG2E, method=method, rel_tol=rel_tol)
    return CapacityResult(float(res.value), "quadrature", float(res.error))


def capacity_high_snr_fixed_rx(snr_bar, m, rho) -> CapacityResult:
    """High-SNR capacity at fixed mean receive SNR gamma_bar."""
    _check_snr(snr_bar, "snr_bar")
    _check_m(m)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    value = math.log2(snr_bar) + LOG2E * (2.0 * specfun.digamma(m) - math.log(m * (m + rho)))
    return CapacityResult(value, "high-snr-fixed-rx")


def capacity_high_snr_fixed_tx(snr_hat, m) -> CapacityResult:
    """High-SNR capacity at fixed transmit power; independent of the dependence."""
    _check_snr(snr_hat, "snr_hat")
    _check_m(m)
    value = math.log2(snr_hat) - 2.0 * math.log2(m) + 2.0 * specfun.digamma(m) * LOG2E
    return CapacityResult(value, "high-snr-fixed-tx")


def capacity_low_snr(snr_hat, m, rho) -> CapacityResult:
    """Low-SNR capacity log2(e) (1 + rho/m) gamma_hat.

    ``rho`` may be negative (copula-induced), but not below -min(1, m).
    """
    _check_snr(snr_hat, "snr_hat")
    _check_m(m)
    # small slack for quadrature-derived rho sitting exactly on the bound
    if rho < -min(1.0, m) - 1e-9:
        raise DomainError(f"rho = {rho} below the feasibility bound {-min(1.0, m)}")
    value = LOG2E * max(1.0 + rho / m, 0.0) * snr_hat
    return CapacityResult(value, "low-snr")


def normalized_moment(n, m, rho) -> float:
    """E[gamma^n] / gamma_bar^n under the linear (Kibble) model."""
    _check_m(m)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    if not n > -m:
        raise DomainError(f"moment order must exceed -m, got {n}")
    log_ratio = 2.0 * (specfun.ln_gamma(m + n) - specfun.ln_gamma(m)) - n * math.log(m * (m + rho))
    return math.exp(log_ratio) * specfun.gauss_2f1(-n, -n, m, rho)


def awgn_capacity(snr_hat) -> CapacityResult:
    if not (np.isfinite(snr_hat) and snr_hat >= 0):
        raise DomainError(f"snr_hat must be non-negative, got {snr_hat}")
    return CapacityResult(math.log2(1.0 + snr_hat), "awgn")
