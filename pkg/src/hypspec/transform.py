"""Radial harmonic analysis on H^3 and line-Fourier machinery for multipliers.

The H^3 spherical transform pair (measure 4*pi*sinh^2(r) dr, spherical
function phi_sigma(r) = sin(sigma r)/(sigma sinh r)) is

    khat(sigma) = 4 pi * int_0^inf k(r) phi_sigma(r) sinh^2 r dr
    k(r)        = (1/(2 pi^2)) * int_0^inf khat(sigma) phi_sigma(r) sigma^2 dsigma

(the inversion constant is pinned by the round-trip and heat-kernel tests,
not asserted).  Oscillatory integrals use Filon's rule on uniform grids,
which keeps the quadrature error independent of the oscillation frequency;
multiplier kernels F(alpha P) evaluate the sigma-integral against the exact
spectral-measure closed form either through uniform-grid Filon sums / FFT
(all r at once) or through adaptive oscillatory quadrature (spot checks).
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import ContractError, DomainError, ResolutionError, TruncationError

DEFAULT_R_LO = 1e-3
DEFAULT_R_HI = 40.0
DEFAULT_R_COUNT = 4096
DEFAULT_SIGMA_MAX = 64.0
DEFAULT_SIGMA_COUNT = 8192


def log_grid(lo, hi, count):
    if lo <= 0 or hi <= lo:
        raise DomainError("log grid needs 0 < lo < hi")
    return np.geomspace(lo, hi, count)


@dataclass
class RadialProfile:
    """Samples of a radial kernel on a strictly increasing r-grid."""

    grid: np.ndarray
    values: np.ndarray
    n: int = 2

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or len(self.grid) != len(self.values):
            raise ContractError("grid and values must be 1-d of equal length")
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] <= 0:
            raise ContractError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("profile values must be finite")

    @classmethod
    def from_callable(cls, fn, grid=None, n=2):
        if grid is None:
            grid = log_grid(DEFAULT_R_LO, DEFAULT_R_HI, DEFAULT_R_COUNT)
        return cls(grid, np.asarray(fn(grid)), n)

    def weighted_l2(self):
        w = np.sinh(self.grid) ** self.n
        return math.sqrt(float(np.trapezoid(np.abs(self.values) ** 2 * w, self.grid)))

    def weighted_sup(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class SpectralProfile:
    """Transform values on a uniform sigma-grid starting at 0."""

    sigma: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.values = np.asarray(self.values)
        d = np.diff(self.sigma)
        if self.sigma[0] != 0.0 or np.any(np.abs(d - d[0]) > 1e-9 * d[0]):
            raise ContractError("spectral grid must be uniform and start at 0")


def spherical_function_h3(sigma, r):
    """phi_sigma(r) = sin(sigma r)/(sigma sinh r); phi(0) = 1, |phi| <= 1."""
    sigma = np.asarray(sigma, dtype=float)
    r = np.asarray(r, dtype=float)
    sr = sigma * r
    # sin(x)/x and r/sinh(r), each stable near 0
    ratio1 = np.sinc(sr / np.pi)
    small = np.abs(r) < 1e-4
    with np.errstate(invalid="ignore", over="ignore"):
        ratio2 = np.where(small, 1.0 / (1.0 + r**2 / 6.0 + r**4 / 120.0),
                          r / np.sinh(np.where(small, 1.0, r)))
    out = ratio1 * ratio2
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Filon quadrature on uniform grids
# ---------------------------------------------------------------------------


def _filon_weights(theta):
    """(alpha, beta, gamma) coefficients; series below 0.05 avoids 1/theta^3."""
    theta = np.asarray(theta, dtype=float)
    a = np.empty_like(theta)
    b = np.empty_like(theta)
    g = np.empty_like(theta)
    small = np.abs(theta) < 0.05
    t = theta[small]
    t2 = t * t
    a[small] = t * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * (2.0 / 4725.0)))
    b[small] = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * (2.0 / 567.0)))
    g[small] = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 * (1.0 / 11340.0)))
    t = theta[~small]
    st, ct = np.sin(t), np.cos(t)
    it3 = 1.0 / (t * t * t)
    a[~small] = it3 * (t * t + t * st * ct - 2.0 * st * st)
    b[~small] = 2.0 * it3 * (t * (1.0 + ct * ct) - 2.0 * st * ct)
    g[~small] = 4.0 * it3 * (st - t * ct)
    return a, b, g


def filon_exp(samples, dx, freqs, chunk=256):
    """int_0^{X} f(x) e^{i w x} dx for each w in freqs, f sampled uniformly.

    Filon's rule with a quadratic interpolant per panel pair: the error is
    O(dx^4) uniformly in w.  ``samples`` needs odd length (even panel count).
    """
    f = np.asarray(samples)
    N = len(f)
    if N < 3 or N % 2 == 0:
        raise ContractError("Filon needs an odd number of samples (>= 3)")
    freqs = np.asarray(freqs, dtype=float)
    x = dx * np.arange(N)
    alpha, beta, gamma = _filon_weights(freqs * dx)
    out = np.empty(len(freqs), dtype=complex)
    xe, xo = x[0::2], x[1::2]
    fe, fo = f[0::2].astype(complex), f[1::2].astype(complex)
    for i0 in range(0, len(freqs), chunk):
        w = freqs[i0 : i0 + chunk]
        ee = np.exp(1j * np.outer(w, xe))
        eo = np.exp(1j * np.outer(w, xo))
        s_even = ee @ fe - 0.5 * (fe[0] * ee[:, 0] + fe[-1] * ee[:, -1])
        s_odd = eo @ fo
        a, b, g = alpha[i0 : i0 + chunk], beta[i0 : i0 + chunk], gamma[i0 : i0 + chunk]
        end = 1j * a * (f[0] * np.exp(1j * w * x[0]) - f[-1] * np.exp(1j * w * x[-1]))
        out[i0 : i0 + chunk] = dx * (end + b * s_even + g * s_odd)
    return out


def filon_sin(samples, dx, freqs, chunk=256):
    return filon_exp(samples, dx, freqs, chunk).imag


def filon_cos(samples, dx, freqs, chunk=256):
    return filon_exp(samples, dx, freqs, chunk).real


# ---------------------------------------------------------------------------
# H^3 spherical transform
# ---------------------------------------------------------------------------


def _tail_slope(grid, weights):
    """Log-slope of the integrand envelope over the last third of the grid."""
    m = len(grid)
    sl = slice(2 * m // 3, m)
    w = np.abs(weights[sl])
    if np.all(w < 1e-280):
        return -np.inf
    r = grid[sl]
    w = np.maximum(w, 1e-280)
    # envelope via running max over ~10 windows kills oscillation nulls
    k = max(len(w) // 10, 1)
    env_r, env_w = [], []
    for i in range(0, len(w) - k + 1, k):
        env_r.append(r[i : i + k].mean())
        env_w.append(w[i : i + k].max())
    if len(env_w) < 2:
        return 0.0
    return float(np.polyfit(env_r, np.log(env_w), 1)[0])


def check_transform_tail(profile):
    """Raise TruncationError when the transform integrand grows along the grid."""
    integrand = np.abs(profile.values) * np.exp(-profile.grid) * np.sinh(profile.grid) ** 2
    slope = _tail_slope(profile.grid, integrand)
    if slope > 1e-3:
        r_hi = profile.grid[-1]
        est = float(integrand[-1] / max(slope, 1e-12))
        raise TruncationError(
            f"transform integrand still growing at r={r_hi:g} (log-slope {slope:.3g})",
            tail_estimate=est,
        )


def _resample_weight(profile, oversample):
    """W(r) = 4 pi k(r) sinh(r) resampled to a uniform grid anchored at 0."""
    w_vals = 4.0 * math.pi * profile.values * np.sinh(profile.grid)
    r_hi = float(profile.grid[-1])
    nodes = np.concatenate(([0.0], profile.grid))
    vals = np.concatenate(([0.0], w_vals))
    spline = CubicSpline(nodes, vals)
    n_fine = int(oversample * len(profile.grid))
    if n_fine % 2 == 0:
        n_fine += 1
    fine = np.linspace(0.0, r_hi, n_fine)
    return fine[1] - fine[0], spline(fine)


def default_sigma_grid(r_grid):
    """Uniform sigma-grid whose reach and density scale with the r-grid."""
    n_r = len(r_grid)
    smax = max(DEFAULT_SIGMA_MAX, 192.0 * math.sqrt(n_r / 2048.0))
    count = 2 * n_r + 1
    return np.linspace(0.0, smax, count)


def spherical_transform_h3(profile, sigma_grid=None, oversample=8):
    """Forward H^3 spherical transform of a radial profile.

    khat(sigma) = (1/sigma) * int_0^R W(r) sin(sigma r) dr with
    W = 4 pi k(r) sinh(r), evaluated with Filon's rule after resampling W to
    a uniform grid.  Checks the integrand tail and raises TruncationError if
    the grid visibly truncates a divergent integral.
    """
    if profile.n != 2:
        raise DomainError("the elementary spherical transform is H^3 only (n=2)")
    check_transform_tail(profile)
    if sigma_grid is None:
        sigma_grid = default_sigma_grid(profile.grid)
    dx, w_fine = _resample_weight(profile, oversample)
    sig = np.asarray(sigma_grid, dtype=float)
    pos = sig > 0
    vals = np.empty(len(sig), dtype=complex if np.iscomplexobj(w_fine) else float)
    if np.iscomplexobj(w_fine):
        sin_re = filon_sin(w_fine.real, dx, sig[pos])
        sin_im = filon_sin(w_fine.imag, dx, sig[pos])
        vals[pos] = (sin_re + 1j * sin_im) / sig[pos]
    else:
        vals[pos] = filon_sin(w_fine, dx, sig[pos]) / sig[pos]
    if np.any(~pos):
        # sigma = 0 limit: sin(sigma r)/sigma -> r
        x = dx * np.arange(len(w_fine))
        vals[~pos] = integrate.simpson(w_fine * x, dx=dx)
    return SpectralProfile(sig, vals)


def inverse_spherical_transform_h3(spec, r_grid):
    """k(r) = (1/(2 pi^2 sinh r)) int_0^smax khat(sigma) sigma sin(sigma r) dsigma."""
    sig = spec.sigma
    dsig = sig[1] - sig[0]
    g = spec.values * sig
    if len(sig) % 2 == 0:
        sig = sig[:-1]
        g = g[:-1]
    r = np.asarray(r_grid, dtype=float)
    if np.iscomplexobj(g):
        core = filon_sin(g.real, dsig, r) + 1j * filon_sin(g.imag, dsig, r)
    else:
        core = filon_sin(g, dsig, r)
    return RadialProfile(r, core / (2.0 * math.pi**2 * np.sinh(r)), n=2)


def round_trip(profile, sigma_grid=None, oversample=8):
    """profile -> transform -> inverse, back on the original grid."""
    spec = spherical_transform_h3(profile, sigma_grid, oversample)
    return inverse_spherical_transform_h3(spec, profile.grid)


def radial_convolve(k1, k2, sigma_grid=None, oversample=8):
    """Radial convolution on H^3 via transform-multiply-invert."""
    if len(k1.grid) != len(k2.grid) or not np.allclose(k1.grid, k2.grid):
        raise ContractError("profiles must share a common grid")
    if sigma_grid is None:
        sigma_grid = default_sigma_grid(k1.grid)
    s1 = spherical_transform_h3(k1, sigma_grid, oversample)
    s2 = spherical_transform_h3(k2, sigma_grid, oversample)
    prod = SpectralProfile(s1.sigma, s1.values * s2.values)
    return inverse_spherical_transform_h3(prod, k1.grid)


def brute_force_radial_convolve(f1, f2, r_out, s_max=25.0, n_s=160, n_theta=160):
    """Direct double-integral convolution oracle (hyperbolic law of cosines).

    (k1 * k2)(r) = 2 pi int_0^inf int_0^pi
        k1(d(r,s,theta)) k2(s) sinh^2(s) sin(theta) dtheta ds,
    cosh d = cosh r cosh s - sinh r sinh s cos theta.  Gauss-Legendre in both
    variables; f1, f2 are callables (used for accuracy off any grid).
    """
    xs, ws = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * s_max * (xs + 1.0)
    w_s = 0.5 * s_max * ws
    xt, wt = np.polynomial.legendre.leggauss(n_theta)
    th = 0.5 * math.pi * (xt + 1.0)
    w_t = 0.5 * math.pi * wt
    out = np.empty(len(r_out), dtype=float)
    ch_s, sh_s = np.cosh(s), np.sinh(s)
    f2s = np.asarray(f2(s)) * sh_s**2 * w_s
    cos_th = np.cos(th)
    sin_th_w = np.sin(th) * w_t
    for i, r in enumerate(np.asarray(r_out, dtype=float)):
        arg = math.cosh(r) * ch_s[:, None] - math.sinh(r) * sh_s[:, None] * cos_th[None, :]
        d = np.arccosh(np.maximum(arg, 1.0))
        inner = (np.asarray(f1(np.maximum(d, 1e-15))) * sin_th_w[None, :]).sum(axis=1)
        out[i] = 2.0 * math.pi * float(inner @ f2s)
    return out


# ---------------------------------------------------------------------------
# multiplier specifications
# ---------------------------------------------------------------------------


@dataclass
class MultiplierSpec:
    """Even multiplier F supported in [-1, 1] with Sobolev order s.

    ``fn`` evaluates F anywhere (vectorized); ``samples(count)`` returns the
    uniform sample representation on [0, 1].  alpha is the scaling in (0, 1];
    ``bandwidth`` bounds F's own internal frequency content, which fixes how
    densely F(alpha * sigma) must be sampled.
    """

    fn: callable
    s: float
    alpha: float = 1.0
    name: str = "multiplier"
    support: float = 1.0
    bandwidth: float = 60.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError("alpha must lie in (0, 1]")
        probe = np.array([1.3, 2.0, 5.0]) * self.support
        if np.max(np.abs(self.fn(probe))) > 1e-12:
            raise ContractError("multiplier must vanish outside its support")
        probe = np.linspace(0.1, 0.9, 5) * self.support
        if np.max(np.abs(self.fn(probe) - self.fn(-probe))) > 1e-12:
            raise ContractError("multiplier must be even")

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)

    def samples(self, count):
        sig = np.linspace(0.0, self.support, count)
        return sig, np.asarray(self.fn(sig), dtype=float)

    def sobolev_norm(self, n_samples=2**14, box=4.0):
        """Discrete H^s norm from samples: (1/2pi) sum |Fhat|^2 (1+xi^2)^s dxi."""
        sig = np.linspace(-box, box, n_samples, endpoint=False)
        dsig = sig[1] - sig[0]
        vals = np.asarray(self.fn(sig), dtype=float)
        fhat = np.fft.fft(vals) * dsig
        xi = 2.0 * math.pi * np.fft.fftfreq(n_samples, d=dsig)
        total = np.sum(np.abs(fhat) ** 2 * (1.0 + xi**2) ** self.s)
        return math.sqrt(total * (xi[1] - xi[0]) / (2.0 * math.pi))


def multiplier_gaussian(scale=36.0):
    """exp(-scale*sigma^2): supported in [-1,1] to machine precision."""
    return MultiplierSpec(lambda s: np.exp(-scale * np.asarray(s) ** 2),
                          s=8.0, name="gaussian")


def multiplier_c2_bump():
    """(1 - sigma^2)^3 on |sigma|<1: C^2 at the endpoints, H^{3.5-}."""

    def fn(s):
        s = np.asarray(s, dtype=float)
        return np.where(np.abs(s) < 1.0, (1.0 - s**2) ** 3, 0.0)

    return MultiplierSpec(fn, s=3.4, name="c2_bump")


def multiplier_smooth_bump():
    """Mollifier exp(1 - 1/(1-sigma^2)) on |sigma|<1: C^infty, width O(1).

    Wide enough that its own transform decays superpolynomially well before
    r = 4, leaving Fourier tails governed by whatever singular factor it
    multiplies (the fg-tail checks rely on this).
    """

    def fn(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    return MultiplierSpec(fn, s=8.0, name="smooth_bump", bandwidth=80.0)


def multiplier_rough(s=1.6, seed=7, k_max=12, w0=1.0):
    """Lacunary rough bump: window * sum_k 2^{-k s} xi_k cos(2^k w0 sigma).

    The dyadic blocks carry equal H^s mass, so the synthesized function sits
    at (just above) regularity s; the window (1-sigma^2)^4 contributes only
    smoother content for s < 3.  xi_k is seeded Gaussian noise with tiny
    draws rejected (a near-zero block would fake extra smoothness at its
    scale).
    """
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(k_max + 1)
    while np.min(np.abs(xi)) < 0.4:
        redraw = np.abs(xi) < 0.4
        xi[redraw] = rng.standard_normal(int(redraw.sum()))
    xi[0] = 1.5  # keep F(0) away from 0
    amps = 2.0 ** (-s * np.arange(k_max + 1)) * xi

    def fn(sig):
        sig = np.asarray(sig, dtype=float)
        window = np.where(np.abs(sig) < 1.0, (1.0 - sig**2) ** 4, 0.0)
        phases = np.cos(np.multiply.outer(2.0 ** np.arange(k_max + 1) * w0, sig))
        return window * np.tensordot(amps, phases, axes=1)

    return MultiplierSpec(fn, s=s, name=f"rough_s{s}",
                          bandwidth=1.3 * 2.0**k_max * w0)


def multiplier_power_kink(s=1.55, sigma0=0.5, depth=2.0):
    """Rough bump with an interior |sigma^2 - sigma0^2|^gamma kink, gamma = s - 0.45.

    The interior kink gives |Fhat| a smooth oscillating power-law envelope
    ~ rho^{-gamma-1} (membership in H^{s'} for all s' < gamma + 1/2, hence
    in H^s); far-field norms then follow their alpha-scaling law without the
    dyadic sawtooth a lacunary synthesis shows at desk scale.  The (1-s^2)^3
    edge keeps endpoint radiation below the kink law past rho ~ 10.
    """
    gamma = s - 0.45
    if gamma <= 0.5:
        raise DomainError("need s > 0.95 for a genuine kink profile")

    def fn(sig):
        sig = np.asarray(sig, dtype=float)
        edge = np.where(np.abs(sig) < 1.0, (1.0 - sig**2) ** 3, 0.0)
        return edge * (1.0 - depth * np.abs(sig**2 - sigma0**2) ** gamma)

    return MultiplierSpec(fn, s=s, name=f"kink_s{s}", bandwidth=3000.0)


def multiplier_spike(center=0.5, width=0.02):
    """Narrow smooth bump at sigma=center: transform concentrated at r ~ center."""

    def fn(sig):
        sig = np.asarray(sig, dtype=float)
        u = (np.abs(sig) - center) / width
        out = np.zeros_like(sig)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    return MultiplierSpec(fn, s=8.0, name="spike", bandwidth=10.0 / width)


# ---------------------------------------------------------------------------
# multiplier kernels F(alpha P)
# ---------------------------------------------------------------------------


def _required_h(spec, r_max):
    """Sigma spacing: the Nyquist rule d(sigma)*r_max < pi/4 (halved for
    margin) and fine enough to interpolate F(alpha*sigma) itself."""
    h_osc = math.pi / (8.0 * r_max)
    h_bw = math.pi / (6.0 * max(spec.alpha * spec.bandwidth, 1.0))
    return min(h_osc, h_bw)


def _required_sample_count(spec, r_max):
    smax = spec.support / spec.alpha
    return int(math.ceil(smax / _required_h(spec, r_max))) + 1


def _multiplier_sigma_samples(spec, r_max, n_sigma=None):
    """Uniform samples of F(alpha*sigma) on [0, support/alpha], odd count."""
    needed = _required_sample_count(spec, r_max)
    if n_sigma is not None and n_sigma < needed:
        raise ResolutionError(
            f"{n_sigma} sigma-samples cannot resolve F(alpha sigma) against "
            f"oscillation at r={r_max:g}; need at least {needed}",
            required=needed,
        )
    count = n_sigma or needed
    if count % 2 == 0:
        count += 1
    smax = spec.support / spec.alpha
    sig = np.linspace(0.0, smax, count)
    return sig, np.asarray(spec.fn(spec.alpha * sig), dtype=float)


def multiplier_kernel(n, spec, r_grid=None, method="filon", n_sigma=None):
    """Kernel of F(alpha P) on H^{n+1}: K(r) = int F(alpha sigma) dE(sigma, r).

    method="filon": uniform-sigma-grid Filon sums of the phase moments
    int F(alpha s) s^j e^{i s r} ds, assembled with the exact recursion
    coefficients (the FFT specialization of the same sums is used by the
    norm scans).  method="quad": adaptive oscillatory quadrature (QAWO) of F
    against the closed-form kernel, term by term; slower, used as the
    independent cross-check.
    """
    if r_grid is None:
        r_grid = log_grid(DEFAULT_R_LO, DEFAULT_R_HI, 512)
    r = np.asarray(r_grid, dtype=float)
    if method == "quad":
        vals = np.array([_multiplier_quad_value(n, spec, float(ri)) for ri in r])
        return RadialProfile(r, vals, n=n)
    if method != "filon":
        raise ContractError("method must be 'filon' or 'quad'")
    sig, fvals = _multiplier_sigma_samples(spec, float(r.max()), n_sigma)
    dsig = sig[1] - sig[0]
    sym = kernels.spectral_measure_symbol(n)
    u = 1.0 / np.tanh(r)
    v = 1.0 / np.sinh(r)
    acc = np.zeros(len(r), dtype=float)
    for j, poly in sym.terms.items():
        moment = filon_exp(fvals * sig**j, dsig, r)
        acc += poly.eval(u, v, r) * np.real(1j ** ((sym.i_pow + j) % 4) * moment)
    scale = float(sym.pref) * math.pi**sym.pi_pow
    return RadialProfile(r, scale * acc, n=n)


def _multiplier_quad_value(n, spec, r):
    """QAWO evaluation of int_0^{sup/alpha} F(alpha s) dE(s, r) ds.

    The closed-form kernel splits into terms poly * s^j * {cos,sin}(s r); each
    goes to QUADPACK's oscillatory-weight rule, the independent route used to
    validate the Filon sums.
    """
    sym = kernels.spectral_measure_symbol(n)
    smax = spec.support / spec.alpha
    u = 1.0 / math.tanh(r)
    v = 1.0 / math.sinh(r)
    total = 0.0
    for j, poly in sym.terms.items():
        m = (sym.i_pow + j) % 4
        # Re[i^m e^{i s r}] = {cos, -sin, -cos, sin}[m]
        weight = "cos" if m % 2 == 0 else "sin"
        sgn = 1.0 if m in (0, 3) else -1.0
        coeff = poly.eval(u, v, r)

        def g(s, _j=j):
            return float(spec.fn(spec.alpha * s)) * s**_j

        # QAWO's error estimate is pessimistic on rough multipliers even when
        # the value has converged; the route-agreement tests are the guard
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val = integrate.quad(g, 0.0, smax, weight=weight, wvar=r,
                                 limit=max(400, int(4 * smax * r / math.pi) + 50))[0]
        total += coeff * sgn * val
    return float(sym.pref) * math.pi**sym.pi_pow * total


def multiplier_kernel_fft(n, spec, r_max, dr_target=None):
    """F(alpha P) kernel on the dense uniform FFT node grid, r in (0, r_max].

    Same Filon-weighted sums as multiplier_kernel, evaluated at the conjugate
    FFT nodes for every moment at once; used by the uniformity norm scans.
    Returns (r_nodes, values).
    """
    smax = spec.support / spec.alpha
    n_s = int(math.ceil(smax / _required_h(spec, r_max))) + 1
    if n_s % 2 == 0:
        n_s += 1
    dsig = smax / (n_s - 1)
    if dr_target is None:
        # the kernel oscillates no faster than smax, so the r-nodes only
        # need to resolve that scale
        dr_target = min(0.3, 0.4 / smax)
    n_pad = 1 << int(math.ceil(math.log2(2.0 * math.pi / (dsig * dr_target))))
    n_pad = max(n_pad, 1 << int(math.ceil(math.log2(n_s + 1))))
    if n_pad > 1 << 24:
        raise ResolutionError(
            f"FFT of {n_pad} points needed (sigma spacing {dsig:.3g}, r spacing "
            f"{dr_target:.3g}); reduce r_max or the multiplier bandwidth",
            required=n_pad,
        )
    sig = dsig * np.arange(n_s)
    fvals = np.asarray(spec.fn(spec.alpha * sig), dtype=float)
    r_nodes = 2.0 * math.pi * np.arange(n_pad // 2) / (n_pad * dsig)
    theta = r_nodes * dsig
    alpha_w, beta_w, gamma_w = _filon_weights(theta)
    sym = kernels.spectral_measure_symbol(n)
    keep = (r_nodes > 0) & (r_nodes <= r_max)
    r = r_nodes[keep]
    u = 1.0 / np.tanh(r)
    v = 1.0 / np.sinh(r)
    acc = np.zeros(len(r), dtype=float)
    for j, poly in sym.terms.items():
        g = fvals * sig**j
        ge = np.zeros(n_pad)
        go = np.zeros(n_pad)
        ge[0:n_s:2] = g[0::2]
        go[1:n_s:2] = g[1::2]
        Ee = np.fft.rfft(ge).conj()[: n_pad // 2]
        Eo = np.fft.rfft(go).conj()[: n_pad // 2]
        s_even = Ee - 0.5 * (g[0] + g[-1] * np.exp(1j * r_nodes * sig[-1]))
        end = 1j * alpha_w * (g[0] - g[-1] * np.exp(1j * r_nodes * sig[-1]))
        moment = dsig * (end + beta_w * s_even + gamma_w * Eo)
        acc += poly.eval(u, v, r) * np.real(1j ** ((sym.i_pow + j) % 4) * moment[keep])
    scale = float(sym.pref) * math.pi**sym.pi_pow
    return r, scale * acc


# ---------------------------------------------------------------------------
# Fourier tails (multiplier far-field decay)
# ---------------------------------------------------------------------------


def smooth_cutoff(sig, inner=1.0, outer=2.0):
    """Smooth even cutoff, identically 1 on [-inner, inner], 0 beyond outer.

    C^infty transition h(u) = f(1-u)/(f(u)+f(1-u)) with f(t) = e^{-1/t}.
    """
    sig = np.asarray(sig, dtype=float)
    a = np.abs(sig)
    out = np.ones_like(a)
    out[a >= outer] = 0.0
    mid = (a > inner) & (a < outer)
    u = (a[mid] - inner) / (outer - inner)
    f_u = np.exp(-1.0 / u)
    f_1u = np.exp(-1.0 / (1.0 - u))
    out[mid] = f_1u / (f_u + f_1u)
    return out


def fg_wide_gaussian(width=3.0):
    """e^{-(sigma/width)^2}: the default F for the tail-law checks.

    Entire, so the only singularity of F * s^m * phi is the s^m kink at 0
    (with the cutoff transition placed where F is already ~1e-16); the tail
    law R^{-(2m+1)} is then clean from R = 4 on.
    """
    return lambda s: np.exp(-(np.asarray(s, dtype=float) / width) ** 2)


def fg_tail(F_fn, m, R, phi_fn=None, sigma_max=24.0, n_sigma=2**15, pad=2**20):
    """Tail integral int_{r >= R} |(Fhat * Ghat)(r)|^2 dr, G = theta(s) s^m phi.

    Fhat * Ghat = 2 pi (F G)^hat, so the product H = F * s^m * phi is formed
    on a fine uniform grid and transformed with a heavily padded FFT; the
    homogeneous factor s^m gives Ghat its |r|^{-1-m} tail, which the fine
    grid must resolve at the origin.  R beyond half the FFT reach raises
    ResolutionError.  The default cutoff turns off over [18, 23].
    """
    if m <= 0:
        raise DomainError("m must be positive")
    if R < 1.0:
        raise DomainError("R must be >= 1")
    phi = phi_fn or (lambda s: smooth_cutoff(s, inner=18.0, outer=23.0))
    L = float(sigma_max)
    sig = np.linspace(0.0, L, n_sigma, endpoint=False)
    dsig = sig[1] - sig[0]
    H = np.asarray(F_fn(sig), dtype=float) * sig**m * np.asarray(phi(sig), dtype=float)
    if not np.any(H):
        return 0.0
    r_max = math.pi / dsig
    if R > 0.5 * r_max:
        raise ResolutionError(
            f"R={R:g} beyond half the FFT reach {r_max:g}; increase pad",
            required=2 * pad,
        )
    hhat = np.fft.fft(H, n=pad) * dsig
    r_nodes = 2.0 * math.pi * np.fft.fftfreq(pad, d=dsig)
    dr = 2.0 * math.pi / (pad * dsig)
    mask = (r_nodes >= R) & (r_nodes <= r_max)
    vals = (2.0 * math.pi) ** 2 * np.abs(hhat[mask]) ** 2
    return float(np.sum(vals) * dr)


def extract_envelope(r, values, n_windows=24):
    """(r_centers, local max |values|) for log-envelope slope fits."""
    r = np.asarray(r, dtype=float)
    a = np.abs(np.asarray(values))
    edges = np.linspace(0, len(r), n_windows + 1, dtype=int)
    cs, vs = [], []
    for i0, i1 in zip(edges[:-1], edges[1:]):
        if i1 - i0 < 1:
            continue
        k = i0 + int(np.argmax(a[i0:i1]))
        cs.append(r[k])
        vs.append(a[k])
    return np.asarray(cs), np.asarray(vs)
