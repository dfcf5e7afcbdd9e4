"""Kernel recursion, resolvent/spectral-measure closed forms, chi_+ family.

Expected values were computed with mpmath at 40 digits from the stated
closed forms (independently of the recursion code); derivative coefficients
were checked against high-precision numerical differentiation.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from hypspec import kernels as K
from hypspec.errors import ContractError, DomainError, UnsupportedOrderError


def test_poly_u2_reduction():
    p = K.Poly({(2, 0, 0): 1})  # u^2 -> 1 + v^2
    assert p == K.Poly({(0, 0, 0): 1, (0, 2, 0): 1})


def test_apply_d_single_application():
    k = K.phase_kernel(2)  # one D applied to e^{i sigma r}
    assert k.pi_pow == -1
    assert k.terms == {1: K.Poly({(0, 1, 0): Fraction(-1, 2)})}


def test_apply_d_twice_coefficients():
    # oracle: -(1/2pi) csch d/dr applied twice to e^{i sigma r}; verified by
    # numerical differentiation at dps=40:
    #   j=1 coefficient -(1/2pi)^2 u v^2, j=2 coefficient +(1/2pi)^2 v^2
    k = K.phase_kernel(4)
    assert k.pi_pow == -2
    assert k.terms[1] == K.Poly({(1, 2, 0): Fraction(-1, 4)})
    assert k.terms[2] == K.Poly({(0, 2, 0): Fraction(1, 4)})


def test_apply_d_numeric_against_differentiation_oracle():
    import mpmath as mp

    mp.mp.dps = 40
    sig, r0 = mp.mpf(2), mp.mpf(1)

    def D(f):
        return lambda r: -1 / (2 * mp.pi) * mp.csch(r) * mp.diff(f, r)

    oracle = D(D(lambda r: mp.exp(1j * sig * r)))(r0)
    got = K.phase_kernel(4).eval_complex(2.0, 1.0)
    assert abs(got - complex(oracle)) < 1e-10


def test_apply_d_zero_and_term_growth():
    zero = K.SymbolicRadialKernel(2, {0: K.Poly()})
    assert not zero.apply_D().terms
    k = K.phase_kernel(2)
    before = k.monomial_count()
    after = k.apply_D().monomial_count()
    assert after <= 3 * before


def test_resolvent_at_imaginary_sigma():
    # e^{-1}/(4 pi sinh 1), mpmath 40 digits
    got = K.resolvent_kernel(2, 1j, 1.0)
    assert got == pytest.approx(0.02491055652470064, rel=1e-13)
    assert abs(got.imag) < 1e-18


def test_resolvent_decay_order():
    # outgoing kernel at real sigma decays like e^{-r} (order n/2 = 1)
    v10 = abs(K.resolvent_kernel(2, 1.0, 10.0, side=1))
    v15 = abs(K.resolvent_kernel(2, 1.0, 15.0, side=1))
    assert v15 / v10 == pytest.approx(math.exp(-5.0), rel=1e-3)


def test_resolvent_schwarz_reflection():
    sig = 1.3 + 0.4j
    a = K.resolvent_kernel(2, sig, 2.0)
    b = K.resolvent_kernel(2, np.conj(sig), 2.0)
    assert b == pytest.approx(np.conj(a), rel=1e-14)


def test_resolvent_requires_side_on_axis():
    with pytest.raises(DomainError):
        K.resolvent_kernel(2, 1.0, 1.0)
    with pytest.raises(DomainError):
        K.resolvent_kernel(2, 1.0, -1.0, side=1)


def test_spectral_measure_h3_closed_form():
    # 2 sin 2/(2 pi^2 sinh 1), mpmath 40 digits
    assert K.spectral_measure(2, 2.0, 1.0) == pytest.approx(
        0.07839601599046251, rel=1e-14
    )


def test_spectral_measure_small_r_limit():
    sig = 1.7
    assert K.spectral_measure(2, sig, 1e-13) == pytest.approx(
        sig**2 / (2 * math.pi**2), rel=1e-12
    )
    assert float(K.spectral_measure_limit_r0(2, sig)) == pytest.approx(
        sig**2 / (2 * math.pi**2), rel=1e-14
    )
    # H^5 limit sigma^2 (1+sigma^2) / (12 pi^3), mpmath-checked
    assert float(K.spectral_measure_limit_r0(4, 2.0)) == pytest.approx(
        0.05375255738866582, rel=1e-13
    )


def test_series_and_closed_form_agree_at_crossover():
    for n in (2, 4):
        f_ser, _ = K._small_r_funcs(n, 0)
        r = 0.049
        direct = K.spectral_measure_symbol(n).eval_real_part(1.5, r)
        assert float(f_ser(1.5, r)) == pytest.approx(direct, rel=1e-12)


def test_gaussian_fourier_identity():
    # int_0^inf e^{-t s^2} dE(s, r) ds = (4 pi t)^{-3/2} (r/sinh r) e^{-r^2/4t}
    from scipy.integrate import quad

    t, r = 1.0, 1.0
    lhs = quad(lambda s: math.exp(-t * s * s) * K.spectral_measure(2, s, r), 0, 40)[0]
    assert lhs == pytest.approx(0.014876451804282661, rel=1e-10)


def test_stone_combination_matches_spectral_measure():
    sg = np.geomspace(0.1, 10, 12)
    rg = np.geomspace(1e-3, 30, 15)
    S, R = np.meshgrid(sg, rg, indexing="ij")
    rel = np.abs(K.stone_combination(2, S, R) - K.spectral_measure(2, S, R)) / np.abs(
        K.spectral_measure(2, S, R)
    )
    assert rel.max() < 1e-12


def test_spectral_measure_domain_errors():
    with pytest.raises(DomainError):
        K.spectral_measure(2, 1.0, 0.0)
    with pytest.raises(DomainError):
        K.spectral_measure(3, 1.0, 1.0)


def test_deriv_j1_value():
    # (sin 1 + cos 1)/(2 pi^2 sinh 1), mpmath 40 digits
    assert K.spectral_measure_deriv(2, 1, 1.0, 1.0) == pytest.approx(
        0.05956550507857054, rel=1e-13
    )


def test_deriv_j0_matches_and_cap():
    assert K.spectral_measure_deriv(2, 0, 2.0, 1.0) == K.spectral_measure(2, 2.0, 1.0)
    with pytest.raises(UnsupportedOrderError):
        K.spectral_measure_deriv(2, 7, 1.0, 1.0)


def test_deriv_small_r_series():
    # d/dsigma [sigma^2/(2 pi^2)] = sigma/pi^2 at r -> 0
    sig = 1.3
    assert K.spectral_measure_deriv(2, 1, sig, 1e-13) == pytest.approx(
        sig / math.pi**2, rel=1e-10
    )


def test_deriv_against_finite_differences():
    h = 1e-5
    for j in (1, 2):
        stencil = [K.spectral_measure_deriv(2, j - 1, 2.0 + k * h, 1.5) for k in (-1, 1)]
        fd = (stencil[1] - stencil[0]) / (2 * h)
        assert K.spectral_measure_deriv(2, j, 2.0, 1.5) == pytest.approx(fd, rel=1e-8)


# ---------------------------------------------------------------------------
# chi_+^a
# ---------------------------------------------------------------------------


def test_chi_eval_heaviside_and_ramp():
    assert K.chi_plus_eval(0, 2.0) == 1.0
    assert K.chi_plus_eval(0, -1.0) == 0.0
    assert K.chi_plus_eval(1, 2.0) == pytest.approx(2.0, rel=1e-15)


def test_chi_eval_half_order():
    # 4^{-1/2}/Gamma(1/2) = 0.5/sqrt(pi)
    assert K.chi_plus_eval(-0.5, 4.0) == pytest.approx(0.2820947917738781, rel=1e-13)


def test_chi_eval_rejects_low_orders():
    with pytest.raises(DomainError):
        K.chi_plus_eval(-1.0, 1.0)


def test_chi_pair_delta_identity():
    f = K.GaussianBump(0.7, 0.35)
    for x in (0.7, 0.2, 1.1):
        assert K.chi_plus_pair(-1, f, x) == pytest.approx(f(x), abs=1e-10)


def test_chi_pair_heaviside_running_integral():
    f = K.GaussianBump(0.0, 1.0)
    total = math.sqrt(math.pi)
    assert K.chi_plus_pair(0, f, 50.0) == pytest.approx(total, rel=1e-10)
    from scipy.integrate import quad

    half = quad(f, -np.inf, 0.3)[0]
    assert K.chi_plus_pair(0, f, 0.3) == pytest.approx(half, rel=1e-9)


def test_chi_second_derivative_order():
    # chi_+^{-2} pairs to f'(x)
    f = K.GaussianBump(0.0, 0.5)
    assert K.chi_plus_pair(-2, f, 0.2) == pytest.approx(
        float(f.derivative(1)(0.2)), abs=1e-9
    )


def test_chi_pair_requires_derivatives():
    with pytest.raises(ContractError):
        K.chi_plus_pair(-1, lambda x: x, 0.0)


@pytest.mark.parametrize("mu,nu", [(0.0, 0.0), (0.5, 0.25), (-0.5, 1.0)])
def test_chi_semigroup_pairing(mu, nu):
    f = K.GaussianBump(1.0, 0.4)
    x = 1.6

    class Inner:
        support = (f.support[0], np.inf)

        def __call__(self, y):
            return K.chi_plus_pair(nu, f, float(y))

    # truncate the inner support: chi^nu * f decays only for nu < 0, so pick
    # x-window wide enough that the outer integral sees everything relevant
    inner = Inner()
    inner.support = (f.support[0], x + 1.0)
    lhs = K.chi_plus_pair(mu, inner, x)
    rhs = K.chi_plus_pair(mu + nu + 1.0, f, x)
    assert lhs == pytest.approx(rhs, rel=2e-7, abs=1e-9)


def test_gamma_multiplier_bound_values():
    lhs, rhs = K.gamma_multiplier_bound(0.0)
    assert lhs == pytest.approx(1.0, abs=1e-14)
    assert rhs == 1.0
    lhs, rhs = K.gamma_multiplier_bound(10.0)
    # sqrt(sinh(10 pi)/(10 pi)) and e^{5 pi}, mpmath 40 digits
    assert lhs == pytest.approx(837127.9358317548, rel=1e-11)
    assert rhs == pytest.approx(6635623.999341134, rel=1e-13)
    assert lhs <= rhs
    assert K.gamma_multiplier_bound(-10.0)[0] == pytest.approx(lhs, rel=1e-13)
    with pytest.raises(DomainError):
        K.gamma_multiplier_bound(60.0)
