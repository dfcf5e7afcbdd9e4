"""Exact functional calculus on odd-dimensional hyperbolic space H^{n+1}, n = 2k.

Radial kernels of functions of the shifted square-root Laplacian are generated
by applying the ladder operator

    D = -(1/(2*pi)) * csch(r) * d/dr

k times to a phase ``exp(+/- i*sigma*r)``.  The recursion is carried out with
exact rational coefficients in ``u = coth r``, ``v = csch r`` and ``r`` (the
relation u^2 = 1 + v^2 keeps the representation canonical), so the only
floating-point error in kernel values comes from the final substitution.

Derived objects:

* ``resolvent_kernel``   -- outgoing/incoming resolvent boundary values,
* ``spectral_measure``   -- the spectral-measure kernel (real combination of
  the two resolvent boundary values; for n=2 it reduces to
  sigma*sin(sigma*r)/(2*pi^2*sinh r)),
* ``spectral_measure_deriv`` -- exact sigma-derivatives up to order 6.

Near r = 0 the closed forms are 0/0; a cached series expansion (exact
coefficients, generated once per (n, order) with sympy) takes over there.

The module also hosts the homogeneous-distribution family chi_+^a used by the
restriction-interpolation checks: pointwise evaluation for Re a > -1,
pairing against test functions for lower orders via integration by parts,
and the Gamma-line sup bound.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as sps
from scipy.integrate import quad

from .errors import ContractError, DomainError, UnsupportedOrderError

# switch to the exact series expansion once both r and sigma*r are this small
SERIES_SWITCH = 0.05
_SERIES_ORDER = 14
_DERIV_CAP = 6


class Poly:
    """Polynomial in (u, v, r) with Fraction coefficients, u^2 reduced to 1+v^2.

    Monomials are keyed (a, b, c) for u^a v^b r^c with a in {0, 1} after
    canonical reduction.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        if coeffs:
            for mono, c in coeffs.items():
                self._add_mono(mono, Fraction(c))

    def _add_mono(self, mono, c):
        if c == 0:
            return
        a, b, cc = mono
        # u^2 -> 1 + v^2, repeatedly
        while a >= 2:
            self._add_mono((a - 2, b, cc), c)
            a, b = a - 2, b + 2
        key = (a, b, cc)
        new = self.coeffs.get(key, Fraction(0)) + c
        if new == 0:
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = new

    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0): Fraction(c)})

    def __add__(self, other):
        out = Poly()
        for mono, c in self.coeffs.items():
            out._add_mono(mono, c)
        for mono, c in other.coeffs.items():
            out._add_mono(mono, c)
        return out

    def __mul__(self, other):
        out = Poly()
        if isinstance(other, Poly):
            for (a1, b1, c1), x in self.coeffs.items():
                for (a2, b2, c2), y in other.coeffs.items():
                    out._add_mono((a1 + a2, b1 + b2, c1 + c2), x * y)
        else:
            q = Fraction(other)
            for mono, c in self.coeffs.items():
                out._add_mono(mono, c * q)
        return out

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def diff_r(self):
        """Total r-derivative using u' = -v^2, v' = -u v."""
        out = Poly()
        for (a, b, c), x in self.coeffs.items():
            if a:
                out._add_mono((a - 1, b + 2, c), -a * x)
            if b:
                out._add_mono((a + 1, b, c), -b * x)
            if c:
                out._add_mono((a, b, c - 1), c * x)
        return out

    def eval(self, u, v, r):
        acc = 0.0
        for (a, b, c), x in self.coeffs.items():
            term = float(x)
            if a:
                term = term * u
            if b:
                term = term * v**b
            if c:
                term = term * r**c
            acc = acc + term
        return acc

    def __repr__(self):
        items = ", ".join(
            f"u^{a} v^{b} r^{c}: {x}" for (a, b, c), x in sorted(self.coeffs.items())
        )
        return f"Poly({{{items}}})"


class SymbolicRadialKernel:
    """prefactor * pi^pi_pow * i^i_pow * sum_j p_j(u,v,r) (i sigma)^j e^{phase*i*sigma*r}.

    Immutable after construction; ``apply_D`` and ``diff_sigma`` return new
    kernels.  ``terms`` maps the power j of (i*sigma) to its Poly coefficient.
    """

    __slots__ = ("n", "terms", "phase", "pref", "pi_pow", "i_pow")

    def __init__(self, n, terms, phase=1, pref=Fraction(1), pi_pow=0, i_pow=0):
        if n < 2 or n % 2:
            raise DomainError(f"n must be a positive even integer, got {n}")
        if phase not in (1, -1):
            raise DomainError("phase sign must be +1 or -1")
        self.n = n
        self.terms = {j: p for j, p in terms.items() if p}
        self.phase = phase
        self.pref = Fraction(pref)
        self.pi_pow = pi_pow
        self.i_pow = i_pow % 4

    def monomial_count(self):
        return sum(len(p.coeffs) for p in self.terms.values())

    def apply_D(self):
        """One application of -(1/(2*pi)) csch(r) d/dr, exactly."""
        new = {}
        for j, p in self.terms.items():
            dp = p.diff_r()
            # -(1/2) v * dp  (the 1/pi goes into pi_pow)
            contrib = Poly()
            for (a, b, c), x in dp.coeffs.items():
                contrib._add_mono((a, b + 1, c), -x / 2)
            if contrib:
                new[j] = new.get(j, Poly()) + contrib
            # phase derivative: -(1/2) * phase * v * p at j+1
            contrib2 = Poly()
            for (a, b, c), x in p.coeffs.items():
                contrib2._add_mono((a, b + 1, c), -self.phase * x / 2)
            if contrib2:
                new[j + 1] = new.get(j + 1, Poly()) + contrib2
        return SymbolicRadialKernel(
            self.n, new, self.phase, self.pref, self.pi_pow - 1, self.i_pow
        )

    def diff_sigma(self):
        """Exact d/d(sigma); pulls one factor of i into i_pow."""
        new = {}
        for j, p in self.terms.items():
            if j >= 1:
                new[j - 1] = new.get(j - 1, Poly()) + j * p
            rp = Poly({(0, 0, 1): self.phase}) * p
            new[j] = new.get(j, Poly()) + rp
        return SymbolicRadialKernel(
            self.n, new, self.phase, self.pref, self.pi_pow, self.i_pow + 1
        )

    def eval_complex(self, sigma, r):
        """Value at complex sigma, r > 0 (arrays broadcast)."""
        r = np.asarray(r, dtype=float)
        sigma = np.asarray(sigma, dtype=complex)
        u = 1.0 / np.tanh(r)
        v = 1.0 / np.sinh(r)
        isig = 1j * sigma
        acc = np.zeros(np.broadcast(sigma, r).shape, dtype=complex)
        for j, p in self.terms.items():
            acc = acc + p.eval(u, v, r) * isig**j
        acc = acc * np.exp(self.phase * isig * r)
        scale = float(self.pref) * math.pi**self.pi_pow * 1j**self.i_pow
        out = scale * acc
        return out if out.ndim else complex(out)

    def eval_real_part(self, sigma, r):
        """Re(value) for real sigma, organized to avoid complex arithmetic."""
        r = np.asarray(r, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        u = 1.0 / np.tanh(r)
        v = 1.0 / np.sinh(r)
        th = sigma * r
        cos_t, sin_t = np.cos(th), np.sin(th)
        acc = np.zeros(np.broadcast(sigma, r).shape, dtype=float)
        for j, p in self.terms.items():
            m = (self.i_pow + j) % 4
            # Re[i^m e^{i*phase*theta}], phase folded into the sine sign
            if m == 0:
                tr = cos_t
            elif m == 1:
                tr = -self.phase * sin_t
            elif m == 2:
                tr = -cos_t
            else:
                tr = self.phase * sin_t
            acc = acc + p.eval(u, v, r) * sigma**j * tr
        out = float(self.pref) * math.pi**self.pi_pow * acc
        return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def phase_kernel(n, phase=1):
    """D^k e^{phase*i*sigma*r} on H^{n+1}, n = 2k."""
    kern = SymbolicRadialKernel(n, {0: Poly.const(1)}, phase=phase)
    for _ in range(n // 2):
        kern = kern.apply_D()
    return kern


@lru_cache(maxsize=None)
def resolvent_symbol(n, side):
    """Boundary value of the resolvent on the given side of the spectrum.

    side=+1: outgoing, -(1/(2 i sigma)) D^k e^{+i sigma r}
    side=-1: incoming, +(1/(2 i sigma)) D^k e^{-i sigma r}

    The two sides are Schwarz reflections of each other, which fixes the sign
    of the incoming branch (it makes the resolvent positive on the negative
    spectral axis and makes Stone's combination real).
    """
    base = phase_kernel(n, phase=side)
    terms = {}
    for j, p in base.terms.items():
        # (i sigma)^j / (2 i sigma) = (i sigma)^{j-1} / 2; every j >= 1 here
        terms[j - 1] = p * Fraction(-side, 2)
    return SymbolicRadialKernel(n, terms, phase=side, pi_pow=base.pi_pow)


@lru_cache(maxsize=None)
def spectral_measure_symbol(n, deriv=0):
    """(d/dsigma)^deriv of the spectral-measure kernel as a symbolic object.

    The value of the spectral measure is the real part of this kernel at real
    sigma (Stone's formula applied to the two resolvent boundary values).
    """
    if deriv > _DERIV_CAP:
        raise UnsupportedOrderError(
            f"sigma-derivatives supported up to order {_DERIV_CAP}, got {deriv}"
        )
    kern = phase_kernel(n, phase=1)
    kern = SymbolicRadialKernel(
        n, kern.terms, kern.phase, kern.pref, kern.pi_pow - 1, kern.i_pow
    )
    for _ in range(deriv):
        kern = kern.diff_sigma()
    return kern


# ---------------------------------------------------------------------------
# small-r series (exact coefficients via sympy, cached per (n, deriv))
# ---------------------------------------------------------------------------


def _as_sympy(kern, real_part):
    import sympy as sp

    sig, r = sp.symbols("sigma r", positive=True)
    total = sp.Integer(0)
    for j, p in kern.terms.items():
        ppoly = sp.Integer(0)
        for (a, b, c), x in p.coeffs.items():
            ppoly += sp.Rational(x.numerator, x.denominator) * sp.coth(r) ** a * sp.csch(r) ** b * r**c
        if real_part:
            m = (kern.i_pow + j) % 4
            if m == 0:
                tr = sp.cos(sig * r)
            elif m == 1:
                tr = -kern.phase * sp.sin(sig * r)
            elif m == 2:
                tr = -sp.cos(sig * r)
            else:
                tr = kern.phase * sp.sin(sig * r)
            total += ppoly * sig**j * tr
        else:
            total += ppoly * (sp.I * sig) ** j * sp.exp(kern.phase * sp.I * sig * r)
    pref = sp.Rational(kern.pref.numerator, kern.pref.denominator)
    return pref * sp.pi**kern.pi_pow * total, sig, r


@lru_cache(maxsize=None)
def _small_r_funcs(n, deriv):
    """(series evaluator, r->0 limit evaluator) for the deriv-th dE derivative."""
    import sympy as sp

    expr, sig, r = _as_sympy(spectral_measure_symbol(n, deriv), real_part=True)
    ser = sp.series(expr, r, 0, _SERIES_ORDER).removeO()
    ser = sp.expand(ser)
    limit_poly = ser.subs(r, 0)
    f_ser = sp.lambdify((sig, r), ser, modules="numpy")
    f_lim = sp.lambdify(sig, limit_poly, modules="numpy")
    return f_ser, f_lim


def spectral_measure_limit_r0(n, sigma, deriv=0):
    """Exact r -> 0 limit of the (deriv-th sigma-derivative of the) kernel."""
    _, f_lim = _small_r_funcs(n, deriv)
    out = f_lim(np.asarray(sigma, dtype=float))
    return out + np.zeros_like(np.asarray(sigma, dtype=float))


# ---------------------------------------------------------------------------
# public evaluators
# ---------------------------------------------------------------------------


def resolvent_kernel(n, sigma, r, side=None):
    """Resolvent boundary-value kernel at spectral parameter sigma, r > 0.

    For Im sigma != 0 the side is inferred (upper half plane = outgoing).
    Real sigma is a boundary value and requires an explicit side in {+1, -1}.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("r must be positive")
    imag = np.imag(np.asarray(sigma, dtype=complex))
    if np.all(imag > 0):
        side = 1
    elif np.all(imag < 0):
        side = -1
    elif np.any(imag != 0):
        raise DomainError("sigma values must share one half-plane")
    elif side not in (1, -1):
        raise DomainError("real sigma needs an explicit side flag (+1 or -1)")
    return resolvent_symbol(n, side).eval_complex(sigma, r)


def _eval_with_series(n, deriv, sigma, r):
    sigma = np.asarray(sigma, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    shape = np.broadcast(sigma, r).shape
    sig_b = np.broadcast_to(sigma, shape)
    r_b = np.broadcast_to(r, shape)
    out = np.empty(shape, dtype=float)
    small = np.maximum(r_b, np.abs(sig_b) * r_b) < SERIES_SWITCH
    if np.any(~small):
        sym = spectral_measure_symbol(n, deriv)
        vals = sym.eval_real_part(sig_b[~small], r_b[~small])
        out[~small] = vals
    if np.any(small):
        f_ser, _ = _small_r_funcs(n, deriv)
        out[small] = f_ser(sig_b[small], r_b[small])
    if out.ndim == 0 or shape == ():
        return float(out)
    return out


def spectral_measure(n, sigma, r):
    """Spectral-measure kernel dE(sigma)(z,z') at geodesic distance r.

    n = 2k is the boundary dimension (ambient hyperbolic space H^{n+1});
    for n = 2 this is sigma*sin(sigma r)/(2 pi^2 sinh r).
    """
    return _eval_with_series(n, 0, sigma, r)


def spectral_measure_deriv(n, j, sigma, r):
    """Exact j-th sigma-derivative of the spectral-measure kernel, j <= 6."""
    if j < 0:
        raise DomainError("derivative order must be nonnegative")
    if j > _DERIV_CAP:
        raise UnsupportedOrderError(
            f"sigma-derivatives supported up to order {_DERIV_CAP}, got {j}"
        )
    return _eval_with_series(n, j, sigma, r)


def stone_combination(n, sigma, r):
    """(sigma/(pi i)) (R(sigma+i0) - R(sigma-i0)), evaluated numerically.

    Independent route to the spectral measure, used by the equivalence checks.
    """
    rp = resolvent_kernel(n, sigma, r, side=1)
    rm = resolvent_kernel(n, sigma, r, side=-1)
    sigma = np.asarray(sigma, dtype=float)
    return np.real(sigma / (np.pi * 1j) * (rp - rm))


# ---------------------------------------------------------------------------
# the chi_+^a family
# ---------------------------------------------------------------------------


def chi_plus_eval(a, x):
    """chi_+^a(x) = x_+^a / Gamma(a+1), valid for Re a > -1."""
    a = complex(a)
    if a.real <= -1:
        raise DomainError("Re a <= -1 has no pointwise values; use chi_plus_pair")
    x = np.asarray(x, dtype=float)
    ga = sps.gamma(a + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if a.imag == 0:
            vals = np.where(x < 0, 0.0, np.power(np.maximum(x, 0.0), a.real)) / ga.real
        else:
            xp = np.maximum(x, 0.0).astype(complex)
            vals = np.where(x < 0, 0.0, np.power(xp, a)) / ga
    if vals.ndim == 0:
        return vals.item()
    return vals


class GaussianBump:
    """Smooth test function exp(-((x-center)/width)^2) with exact derivatives.

    Compactly supported to machine precision on [center - 9w, center + 9w];
    the reported support is used as the quadrature window.
    """

    def __init__(self, center=0.0, width=1.0):
        self.center = float(center)
        self.width = float(width)
        self.support = (self.center - 9.0 * self.width, self.center + 9.0 * self.width)

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return np.exp(-(u**2))

    def derivative(self, k):
        if k == 0:
            return self

        def dk(x, _k=k):
            u = (np.asarray(x, dtype=float) - self.center) / self.width
            return (-1.0 / self.width) ** _k * sps.eval_hermite(_k, u) * np.exp(-(u**2))

        return dk


def chi_plus_pair(a, f, x):
    """(chi_+^a * f)(x) for any complex order a.

    For Re a <= -1 the convolution is rewritten as (chi_+^{a+k} * f^{(k)})(x)
    with k = ceil(-Re a); f must expose ``derivative(k)`` evaluators and a
    ``support`` interval.  a = -1 reproduces f(x) (the delta identity).
    """
    a = complex(a)
    k = 0 if a.real > -1 else math.ceil(-a.real)
    b = a + k
    if k > 0:
        if not hasattr(f, "derivative"):
            raise ContractError(
                f"order {a} needs derivative evaluators up to order {k}"
            )
        g = f.derivative(k)
    else:
        g = f
    lo, hi = getattr(f, "support", (-np.inf, np.inf))
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ContractError("test function must declare a finite support window")
    t0 = max(0.0, x - hi)
    t1 = x - lo
    if t1 <= t0:
        return 0.0
    ga = sps.gamma(b + 1)

    if b.imag == 0:
        br = b.real
        if -1 < br < 0 and t0 == 0.0:
            # substitute t = tau^p with p = 1/(1+b): flat integrand at 0
            p = 1.0 / (1.0 + br)
            val = quad(
                lambda tau: np.real(g(x - tau**p)), 0.0, t1 ** (1.0 / p),
                limit=200,
            )[0] * p
        else:
            val = quad(
                lambda t: t**br * np.real(g(x - t)), t0, t1, limit=200,
                points=[t0] if t0 == 0 else None,
            )[0]
        return val / ga.real

    def integrand(t, part):
        w = t ** b  # complex power, t > 0
        z = w * g(x - t)
        return z.real if part == 0 else z.imag

    re = quad(lambda t: integrand(t, 0), t0, t1, limit=400)[0]
    im = quad(lambda t: integrand(t, 1), t0, t1, limit=400)[0]
    return (re + 1j * im) / ga


def gamma_multiplier_bound(s):
    """(|1/Gamma(1+is)|, e^{pi|s|/2}); the first must not exceed the second."""
    s = float(s)
    if abs(s) > 50:
        raise DomainError("|s| <= 50 (beyond that the bound overflows doubles)")
    lhs = float(abs(1.0 / sps.gamma(1.0 + 1j * s)))
    rhs = math.exp(math.pi * abs(s) / 2.0)
    return lhs, rhs
