import numpy as np
import pytest

from torpde.calculus import (
    adjoint_expansion,
    composition_expansion,
    expansion_report_csv,
    remainder_order_estimate,
)
from torpde.decay import InsufficientShellsError
from torpde.grid import GridSpec
from torpde.symbols import (
    ScalarSymbol,
    SymbolClassParams,
    bessel_symbol,
    constant_symbol,
    frac_laplacian_symbol,
    tabulate_symbol,
)

SLACK = 0.3


def twisted_bracket(spec, order):
    """e^{2 pi i x} <xi>^order, the workhorse x-dependent symbol."""

    def fn(xs, xis):
        return np.exp(2j * np.pi * xs[0]) * (1.0 + xis[0] ** 2) ** (order / 2.0)

    return tabulate_symbol(spec, fn, SymbolClassParams(order, 1.0, 0.0))


def sine_symbol(spec):
    return tabulate_symbol(
        spec,
        lambda xs, xis: np.sin(2 * np.pi * xs[0]) * np.ones_like(xis[0]),
        SymbolClassParams(0.0, 1.0, 0.0),
    )


class TestAdjointExpansion:
    def test_real_multiplier_exact_at_zero(self, spec128):
        res = adjoint_expansion(bessel_symbol(spec128, 1.0), 0)
        assert np.max(np.abs(res.remainder.values)) <= 1e-10

    def test_reference_matches_exact_shift(self, spec128):
        # adjoint of e^{2 pi i x} <xi> maps e_eta -> <eta-1> e_{eta-1}
        res = adjoint_expansion(twisted_bracket(spec128, 1.0), 0)
        x = spec128.axis_coordinates()
        xi = spec128.axis_frequencies().astype(float)
        exact = np.exp(-2j * np.pi * x)[:, None] * np.sqrt(1.0 + (xi - 1.0) ** 2)[None, :]
        interior = np.abs(xi) <= spec128.freq_cutoff // 2
        err = np.max(np.abs(res.reference.values[:, interior] - exact[:, interior]))
        assert err < 1e-11 * np.max(np.abs(exact))

    @pytest.mark.parametrize("order", [0.7, 1.0])
    def test_remainder_slopes(self, spec128, order):
        slopes = {}
        for trunc in (0, 1):
            res = adjoint_expansion(twisted_bracket(spec128, order), trunc)
            assert res.claimed_remainder_order == pytest.approx(order - (trunc + 1))
            est = remainder_order_estimate(res.remainder)
            slopes[trunc] = est.slope
            assert est.slope <= res.claimed_remainder_order + SLACK
        assert slopes[0] - slopes[1] >= 0.7

    def test_split_is_exact(self, spec128):
        res = adjoint_expansion(twisted_bracket(spec128, 1.0), 1)
        recon = res.partial_sum.values + res.remainder.values
        scale = max(np.max(np.abs(res.reference.values)), 1.0)
        assert np.max(np.abs(recon - res.reference.values)) <= 1e-12 * scale


class TestCompositionExpansion:
    def test_multipliers_exact_at_zero(self, spec128):
        res = composition_expansion(
            bessel_symbol(spec128, 1.0), frac_laplacian_symbol(spec128, 0.5), 0
        )
        assert np.max(np.abs(res.remainder.values)) <= 1e-10

    def test_x_independent_second_factor_exact(self, spec128):
        res = composition_expansion(
            twisted_bracket(spec128, 1.0), bessel_symbol(spec128, 0.5), 0
        )
        scale = np.max(np.abs(res.reference.values))
        assert np.max(np.abs(res.remainder.values)) <= 1e-10 * scale

    @pytest.mark.parametrize("order", [0.7, 1.0])
    def test_remainder_slopes(self, spec128, order):
        slopes = {}
        for trunc in (0, 1):
            res = composition_expansion(bessel_symbol(spec128, order), sine_symbol(spec128), trunc)
            assert res.claimed_remainder_order == pytest.approx(order - (trunc + 1))
            est = remainder_order_estimate(res.remainder)
            slopes[trunc] = est.slope
            assert est.slope <= res.claimed_remainder_order + SLACK
        assert slopes[0] - slopes[1] >= 0.7

    def test_swap_drops_one_order(self, spec128):
        # the commutator of an order-1 multiplier with multiplication is order 0
        a1 = bessel_symbol(spec128, 1.0)
        a2 = sine_symbol(spec128)
        ab = composition_expansion(a1, a2, 0).reference
        ba = composition_expansion(a2, a1, 0).reference
        diff = ScalarSymbol(spec128, a1.params, 0, ab.values - ba.values)
        est = remainder_order_estimate(diff)
        assert abs(est.slope - 0.0) <= SLACK


class TestRemainderOrderEstimate:
    def test_bracket_inverse_square(self, spec128):
        est = remainder_order_estimate(bessel_symbol(spec128, -2.0), max_radius=63)
        assert est.slope == pytest.approx(-2.0, abs=0.15)

    def test_zero_symbol_sentinel(self, spec128):
        est = remainder_order_estimate(constant_symbol(spec128, 0.0))
        assert est.is_zero and est.slope == -np.inf

    def test_order_zero(self, spec128):
        est = remainder_order_estimate(bessel_symbol(spec128, 0.0), max_radius=63)
        assert est.slope == pytest.approx(0.0, abs=0.1)

    def test_too_few_shells(self):
        spec = GridSpec(1, 16, 7)
        with pytest.raises(InsufficientShellsError):
            remainder_order_estimate(bessel_symbol(spec, 0.0))  # |xi| <= 3.5


def test_expansion_report_csv(spec128):
    results = {}
    for trunc in (0, 1):
        res = adjoint_expansion(twisted_bracket(spec128, 1.0), trunc)
        results[trunc] = (res, remainder_order_estimate(res.remainder))
    text = expansion_report_csv(results)
    lines = text.strip().splitlines()
    assert lines[0] == "N,shell,sup,fitted_slope,claimed_order,pass"
    assert all(line.split(",")[-1] == "1" for line in lines[1:])
    assert {line.split(",")[0] for line in lines[1:]} == {"0", "1"}
