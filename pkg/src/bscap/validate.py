"""Cross-check suite behind ``bscap validate``.

Each check compares two independent routes to the same number (closed form
vs quadrature vs Monte Carlo, or a quantity vs its known exact value) and
records the value, the tolerance and the verdict.  The report contains no
timing or host information, so a fixed seed gives a byte-identical JSON
dump.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import specfun
from .capacity import (capacity_high_snr_fixed_tx, capacity_quadrature, normalized_moment)
from .copulas import FGM, Countermonotone, Frank
from .dependence import pearson_from_copula, rho_lower, rho_upper, upper_bound_discrepancy
from .montecarlo import SimSpec, estimate_capacity, ks_distance, ks_threshold, sample_snr
from .snr import SnrModel, pdf_fgm_closed, pdf_general, expect, total_mass

DEFAULT_SEED = 20240611
MC_SIGMAS = 4.0


def _r12(x):
    # 12 significant digits keeps the JSON stable against last-bit noise
    return float(f"{float(x):.12g}")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def within(cls, name, deviation, tolerance):
        dev = abs(float(deviation))
        return cls(name, _r12(dev), tolerance, bool(dev <= tolerance))


def _quick_checks():
    out = []
    z = 0.5
    out.append(Check.within("2f1 log identity at z=0.5",
                            specfun.gauss_2f1(1.0, 1.0, 2.0, z) + math.log1p(-z) / z, 1e-13))
    out.append(Check.within("2f1 terminating at z=-3",
                            specfun.gauss_2f1(-2.0, 1.0, 1.0, -3.0) - 16.0, 1e-12))

    gam = np.array([0.05, 0.4, 1.0, 2.5, 7.0])
    closed = pdf_fgm_closed(gam, 0.5, 2, 1.0)
    general = pdf_general(gam, SnrModel.build(2, FGM(0.5), snr_hat=1.0))
    out.append(Check.within("fgm closed vs general pdf, m=2", np.max(np.abs(closed - general)), 1e-6))

    mass = total_mass(SnrModel.build(0.5, FGM(1.0), snr_hat=1.0), method="general").value
    out.append(Check.within("fgm pdf mass, m=0.5", mass - 1.0, 1e-6))
    kib = SnrModel.build(2, "linear:0.5", snr_hat=1.0)
    out.append(Check.within("kibble pdf mass, m=2", total_mass(kib).value - 1.0, 1e-6))
    mean = expect(kib, lambda g: g).value
    out.append(Check.within("kibble mean, m=2", mean / kib.mean_snr - 1.0, 1e-5))

    out.append(Check.within("rho fgm(1), m=1", pearson_from_copula(FGM(1.0), 1.0).rho - 0.25, 1e-8))
    out.append(Check.within("rho fgm(1), m=0.5",
                            pearson_from_copula(FGM(1.0), 0.5).rho - 2.0 / math.pi ** 2, 1e-8))
    out.append(Check.within("rho upper bound, m=2", rho_upper(2.0) - 1.0, 1e-6))
    out.append(Check.within("rho lower bound, m=1", rho_lower(1.0) - (1.0 - math.pi ** 2 / 6.0), 1e-6))
    out.append(Check.within("rho lower bound vs countermonotone 2-D, m=2",
                            rho_lower(2.0) - pearson_from_copula(Countermonotone(), 2.0).rho, 1e-5))

    for m, r in ((0.5, 0.3), (2.0, 0.9)):
        h = 1e-5
        fd = (normalized_moment(h, m, r) - normalized_moment(-h, m, r)) / (2.0 * h)
        out.append(Check.within(f"moment slope at 0, m={m:g} rho={r:g}",
                                fd - (2.0 * specfun.digamma(m) - math.log(m * (m + r))), 1e-6))
        out.append(Check.within(f"first normalized moment, m={m:g} rho={r:g}",
                                normalized_moment(1.0, m, r) - 1.0, 1e-12))

    hi = SnrModel.build(1, FGM(1.0), snr_hat_db=40.0)
    out.append(Check.within("high-snr asymptote gap, m=1, 40 dB",
                            capacity_quadrature(hi).value - capacity_high_snr_fixed_tx(hi.snr_hat, 1).value,
                            0.05))
    c1 = capacity_quadrature(SnrModel.build(1, FGM(1.0), snr_hat_db=-25.0)).value
    c0 = capacity_quadrature(SnrModel.build(1, FGM(0.0), snr_hat_db=-25.0)).value
    out.append(Check.within("low-snr capacity ratio, m=1, -25 dB", (c1 / c0) / 1.25 - 1.0, 0.03))
    return out


_MC_CONFIGS = (
    (FGM(1.0), 2.0, 0.0),
    (Frank(-30.0), 5.0, -10.0),
    (Frank(30.0), 0.5, 10.0),
    (Countermonotone(), 1.0, 0.0),
)


def _full_checks(seed):
    out = []
    for m in (1, 3):
        for theta in (-1.0, 1.0):
            gam = np.logspace(-2, 1.5, 12)
            closed = pdf_fgm_closed(gam, theta, m, 1.0)
            general = pdf_general(gam, SnrModel.build(m, FGM(theta), snr_hat=1.0))
            out.append(Check.within(f"fgm closed vs general pdf, m={m} theta={theta:g}",
                                    np.max(np.abs(closed - general)), 1e-6))
    for k, (cop, m, db) in enumerate(_MC_CONFIGS):
        model = SnrModel.build(m, cop, snr_hat_db=db)
        spec = SimSpec(model, 200_000, seed=seed + k, n_streams=4)
        est = estimate_capacity(spec)
        ref = capacity_quadrature(model).value
        label = f"{cop.tag}, m={m:g}, {db:g} dB"
        out.append(Check.within(f"mc capacity z-score, {label}", (est.mean - ref) / est.std_error, MC_SIGMAS))
        gam = sample_snr(spec)
        dist, limit = ks_distance(gam, model), ks_threshold(gam.size)
        out.append(Check(f"ks distance, {label}", _r12(dist), _r12(limit), bool(dist < limit)))
    return out


def _reports():
    rows = []
    for m in (1.0, 2.0, 5.0):
        d = upper_bound_discrepancy(m)
        rows.append({"name": f"literal closed-form upper bound vs quadrature, m={m:g}",
                     "closed_form": _r12(d.closed_form), "quadrature": _r12(d.quadrature),
                     "flagged": bool(d.flagged)})
    return rows


def run(quick=False, seed=DEFAULT_SEED):
    """Run the suite and return the report as a plain dict."""
    checks = _quick_checks()
    if not quick:
        checks += _full_checks(int(seed))
    return {
        "seed": int(seed),
        "quick": bool(quick),
        "checks": [asdict(c) for c in checks],
        "reports": _reports(),
        "passed": all(c.passed for c in checks),
    }


def to_json(report):
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def to_text(report):
    lines = []
    for c in report["checks"]:
        verdict = "PASS" if c["passed"] else "FAIL"
        lines.append(f"{verdict}  {c['name']}: {c['value']:.3g} (tol {c['tolerance']:.3g})")
    for r in report["reports"]:
        mark = "DISCREPANCY" if r["flagged"] else "agree"
        lines.append(f"NOTE  {r['name']}: {r['closed_form']:.6g} vs {r['quadrature']:.6g} ({mark})")
    lines.append("all checks passed" if report["passed"] else "some checks FAILED")
    return "\n".join(lines) + "\n"
