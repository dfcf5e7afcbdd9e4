"""Quantitative verification: sup-ratio bound checks, exponent fits, KS bounds.

The theorems under test only assert bounds up to unspecified constants, so
every check measures the sup of |kernel| / envelope over a grid and requires
(i) finiteness and (ii) stability under grid doubling (relative change of the
sup below 0.1).  Exponent claims are tested by log-log least-squares fits.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, transform
from .errors import ContractError, DomainError


@dataclass
class BoundCheckReport:
    region: dict
    sup_ratio: float
    refinement_deltas: list
    passed: bool
    argmax: tuple = None

    @staticmethod
    def evaluate(sup_ratio, deltas):
        ok = (
            math.isfinite(sup_ratio)
            and len(deltas) >= 1
            and deltas[-1] < 0.1
        )
        return ok


@dataclass
class SlopeFit:
    xs: np.ndarray
    ys: np.ndarray
    slope: float
    intercept: float
    residual_rms: float
    confidence_halfwidth: float


def fit_slope(xs, ys):
    """Least-squares line fit with an approximate 95% slope half-width."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 8:
        raise ContractError("slope fits need at least 8 points")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ContractError("slope fits need finite data")
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - (slope * xs + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    dof = max(len(xs) - 2, 1)
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    se = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if sxx > 0 else math.inf
    return SlopeFit(xs, ys, float(slope), float(intercept), rms, 1.96 * se)


# ---------------------------------------------------------------------------
# pointwise spectral-measure bounds
# ---------------------------------------------------------------------------


def envelope_value(n, regime, j, sigma, d):
    """Constant-free envelope for |(d/dsigma)^j dE| in the given regime.

    low  (j=0):  sigma^2                          d <= 1
                 sigma^2 d (1+sigma d)^{-1} e^{-nd/2}   d >= 1
    high:        sigma^{n-j} (1+ d sigma)^{-n/2+j}      d <= 1
                 sigma^{n/2} d^j e^{-nd/2}              d >= 1
    At d = 1 both zone formulas apply; the envelope takes their max.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = np.asarray(d, dtype=float)
    if regime == "low":
        near = sigma**2
        far = sigma**2 * d / (1.0 + sigma * d) * np.exp(-n * d / 2.0)
    elif regime == "high":
        near = sigma ** (n - j) * (1.0 + d * sigma) ** (-n / 2.0 + j)
        far = sigma ** (n / 2.0) * d**j * np.exp(-n * d / 2.0)
    else:
        raise DomainError("regime must be 'low' or 'high'")
    at_boundary = np.isclose(d, 1.0)
    out = np.where(d < 1.0, near, far)
    return np.where(at_boundary, np.maximum(near, far), out)


_REGIME_SIGMA = {"low": (1e-2, 1.0), "high": (1.0, 100.0)}
_ZONE_D = {"near": (1e-3, 1.0), "far": (1.0, 40.0)}


def check_pointwise_bounds(n, regime, j=0, zone="near", sigma_grid=None,
                           r_grid=None, refinements=2, envelope_scale=1.0,
                           base_counts=(48, 64)):
    """Sup of |kernel|/envelope over a (sigma, r) grid with refinement control.

    The report passes iff the sup is finite and its relative change under the
    final grid doubling is below 0.1.  ``envelope_scale`` multiplies the
    envelope (sup_ratio scales by its inverse, exactly).
    """
    if regime == "low" and j != 0:
        raise DomainError("the low-energy check is stated for j = 0")
    sig_lo, sig_hi = _REGIME_SIGMA[regime]
    d_lo, d_hi = _ZONE_D[zone]
    ns, nr = base_counts
    sups = []
    arg = None
    for level in range(refinements + 1):
        sg = (np.geomspace(sig_lo, sig_hi, ns * 2**level)
              if sigma_grid is None else np.asarray(sigma_grid))
        rg = (np.geomspace(d_lo, d_hi, nr * 2**level)
              if r_grid is None else np.asarray(r_grid))
        S, R = np.meshgrid(sg, rg, indexing="ij")
        vals = np.abs(kernels.spectral_measure_deriv(n, j, S, R))
        env = envelope_scale * envelope_value(n, regime, j, S, R)
        ratio = vals / env
        k = int(np.argmax(ratio))
        sups.append(float(ratio.flat[k]))
        arg = (float(S.flat[k]), float(R.flat[k]))
        if sigma_grid is not None or r_grid is not None:
            break
    deltas = [
        abs(sups[i + 1] - sups[i]) / sups[i] if sups[i] else math.inf
        for i in range(len(sups) - 1)
    ]
    sup = sups[-1]
    degenerate = (sigma_grid is not None and len(np.atleast_1d(sigma_grid)) < 2) or (
        r_grid is not None and len(np.atleast_1d(r_grid)) < 2
    )
    if degenerate:
        deltas = []
    passed = BoundCheckReport.evaluate(sup, deltas)
    region = {
        "n": n, "regime": regime, "j": j, "zone": zone,
        "sigma_range": [sig_lo, sig_hi], "d_range": [d_lo, d_hi],
        "grid": [ns, nr], "refinements": refinements,
    }
    return BoundCheckReport(region, sup, deltas, passed, arg)


def all_bound_checks(n, refinements=2):
    """The low-regime (j=0) and high-regime (j=0,1,2) reports, both zones."""
    reports = []
    for zone in ("near", "far"):
        reports.append(check_pointwise_bounds(n, "low", 0, zone, refinements=refinements))
    for j in (0, 1, 2):
        for zone in ("near", "far"):
            reports.append(check_pointwise_bounds(n, "high", j, zone, refinements=refinements))
    return reports


def deriv_bound_check(j, n=2, refinements=2, base_counts=(48, 64)):
    """Sup of |(d/dsigma)^j dE| / sigma over sigma in [1,100], all distances."""
    if j < 1:
        raise DomainError("derivative bound is stated for j >= 1")
    sups = []
    arg = None
    ns, nr = base_counts
    for level in range(refinements + 1):
        sg = np.geomspace(1.0, 100.0, ns * 2**level)
        rg = np.geomspace(1e-3, 40.0, nr * 2**level)
        S, R = np.meshgrid(sg, rg, indexing="ij")
        ratio = np.abs(kernels.spectral_measure_deriv(n, j, S, R)) / S
        k = int(np.argmax(ratio))
        sups.append(float(ratio.flat[k]))
        arg = (float(S.flat[k]), float(R.flat[k]))
    deltas = [abs(sups[i + 1] - sups[i]) / sups[i] for i in range(len(sups) - 1)]
    passed = BoundCheckReport.evaluate(sups[-1], deltas)
    region = {"n": n, "j": j, "sigma_range": [1.0, 100.0], "envelope": "sigma"}
    return BoundCheckReport(region, sups[-1], deltas, passed, arg)


# ---------------------------------------------------------------------------
# restriction endpoint p = 1
# ---------------------------------------------------------------------------


def l1_linf_norm(n, sigma, r_count=2048):
    """sup_r |dE(sigma, r)| = the L^1 -> L^infty norm of the spectral measure.

    The grid sup is combined with the exact r -> 0 limit, which attains the
    sup at high energy.
    """
    if sigma < 1.0:
        raise DomainError("stated for sigma >= 1")
    r = np.geomspace(1e-4, 40.0, r_count)
    vals = np.abs(kernels.spectral_measure(n, sigma, r))
    limit = abs(float(kernels.spectral_measure_limit_r0(n, sigma)))
    return max(float(vals.max()), limit)


def restriction_scan(n, sigmas):
    """Norms over the sigma grid plus the fitted log-log exponent (target n)."""
    sigmas = np.asarray(sigmas, dtype=float)
    norms = np.array([l1_linf_norm(n, s) for s in sigmas])
    fit = fit_slope(np.log(sigmas), np.log(norms))
    return norms, fit


# ---------------------------------------------------------------------------
# Kunze-Stein
# ---------------------------------------------------------------------------


def kunze_stein_bound(kappa, q, n=None):
    """(int_0^inf sinh^n(r) (1+r) e^{-nr/2} |kappa|^{q/2} dr)^{2/q} with C_q = 1.

    Returns math.inf when the integrand visibly grows along the grid tail
    (divergence flag, not an exception).
    """
    if q <= 2:
        raise DomainError("Kunze-Stein needs q > 2")
    n = n if n is not None else kappa.n
    r = kappa.grid
    integrand = np.sinh(r) ** n * (1.0 + r) * np.exp(-n * r / 2.0) * np.abs(
        kappa.values
    ) ** (q / 2.0)
    if not np.any(integrand > 1e-280):
        return 0.0
    slope = transform._tail_slope(r, integrand)
    if slope > 1e-3:
        return math.inf
    return float(np.trapezoid(integrand, r)) ** (2.0 / q)


def ks_empirical_ratio(kappa, q, widths=(0.3, 0.7, 1.3), centers=(0.5, 1.5, 3.0)):
    """Worst ratio ||kappa * f||_q / (bound * ||f||_{q'}) over sampled radial f.

    Reported, not asserted: the KS constant is unmeasurable so ratios above 1
    are possible in principle.  H^3 only.
    """
    bound = kunze_stein_bound(kappa, q)
    if not math.isfinite(bound) or bound == 0.0:
        return math.nan
    qp = q / (q - 1.0)
    grid = kappa.grid
    meas = 4.0 * math.pi * np.sinh(grid) ** 2
    worst = 0.0
    for w in widths:
        for c in centers:
            fvals = np.exp(-(((grid - c) / w) ** 2))
            f = transform.RadialProfile(grid, fvals, n=2)
            conv = transform.radial_convolve(kappa, f)
            num = float(np.trapezoid(np.abs(conv.values) ** q * meas, grid)) ** (1.0 / q)
            den = float(np.trapezoid(fvals**qp * meas, grid)) ** (1.0 / qp)
            worst = max(worst, num / (bound * den))
    return worst


# ---------------------------------------------------------------------------
# multiplier uniformity
# ---------------------------------------------------------------------------


@dataclass
class UniformityReport:
    name: str
    s: float
    alphas: list
    norms: list
    max_min_ratio: float
    trend_slope: float
    trend_halfwidth: float
    passed: bool
    route_gap: float = math.nan


def far_field_l2_norm(spec, n=2, r_min=1.0, r_max=80.0):
    """(int_{r >= 1} |K_alpha(r)|^2 sinh^n r dr)^{1/2}, dense FFT-node Simpson."""
    r, vals = transform.multiplier_kernel_fft(n, spec, r_max)
    mask = r >= r_min
    w = np.sinh(r[mask]) ** n
    from scipy.integrate import simpson

    return math.sqrt(float(simpson(np.abs(vals[mask]) ** 2 * w, x=r[mask])))


def multiplier_uniformity(spec, alphas, n=2, check_routes=True, rng_seed=3):
    """Far-diagonal L^1 -> L^2 norms of F(alpha P) across the alpha ladder.

    Verdict: max/min norm ratio plus the trend slope of norm against
    log(1/alpha) (uniform boundedness wants the trend nonpositive within
    confidence).  Optionally spot-checks the Filon route against adaptive
    oscillatory quadrature at a few random radii (worst relative gap).
    """
    alphas = list(alphas)
    norms = [far_field_l2_norm(spec.with_alpha(a), n=n) for a in alphas]
    fit = fit_slope(np.log(1.0 / np.asarray(alphas)), np.asarray(norms))
    ratio = max(norms) / min(norms) if min(norms) > 0 else math.inf
    passed = fit.slope <= max(0.0, fit.confidence_halfwidth) and math.isfinite(ratio)
    gap = math.nan
    if check_routes:
        rng = np.random.default_rng(rng_seed)
        r_pts = np.sort(rng.uniform(0.2, 3.0, size=5))
        gaps = []
        for a in (alphas[0], alphas[len(alphas) // 2]):
            sp = spec.with_alpha(a)
            filon = transform.multiplier_kernel(n, sp, r_pts).values
            quadv = transform.multiplier_kernel(n, sp, r_pts, method="quad").values
            scale = np.max(np.abs(filon))
            gaps.append(float(np.max(np.abs(filon - quadv)) / scale))
        gap = max(gaps)
    return UniformityReport(
        name=spec.name, s=spec.s, alphas=alphas, norms=norms,
        max_min_ratio=float(ratio), trend_slope=fit.slope,
        trend_halfwidth=fit.confidence_halfwidth, passed=bool(passed),
        route_gap=gap,
    )
