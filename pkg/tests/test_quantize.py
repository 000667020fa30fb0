import numpy as np
import pytest

from torpde.grid import (
    GridSpec,
    l2_inner_product,
    make_exponential,
    random_band_limited,
)
from torpde.quantize import (
    DenseOperator,
    PositivityError,
    adjoint,
    apply_symbol,
    compose,
    extract_symbol,
    hermitian_eigendecomposition,
    identity_operator,
    load_operator,
    materialize,
    multiplier_diagonal,
    operator_function,
    save_operator,
    symmetrize_positive,
)
from torpde.symbols import (
    MatrixSymbol,
    ScalarSymbol,
    SymbolClassParams,
    bessel_symbol,
    constant_symbol,
    frac_laplacian_symbol,
    tabulate_symbol,
    variable_coefficient_symbol,
)

Q_COEFFS = {(1,): -0.25j, (-1,): 0.25j}  # q(x) = 0.5 sin(2 pi x)


def variable_symbol(spec, nu=2.0):
    return variable_coefficient_symbol(spec, nu, Q_COEFFS)


def sine_symbol(spec):
    return tabulate_symbol(
        spec,
        lambda xs, xis: np.sin(2 * np.pi * xs[0]) * np.ones_like(xis[0]),
        SymbolClassParams(0.0, 1.0, 0.0),
    )


class TestApplySymbol:
    def test_identity_symbol(self, spec64, rng):
        f = random_band_limited(spec64, rng)
        g = apply_symbol(constant_symbol(spec64), f)
        assert np.max(np.abs(g.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))

    def test_multiplier_eigenvalue(self, spec64):
        nu, xi0 = 1.5, 4
        g = apply_symbol(frac_laplacian_symbol(spec64, nu), make_exponential(spec64, xi0))
        expected = (2 * np.pi) ** nu * xi0**nu * make_exponential(spec64, xi0).values
        assert np.max(np.abs(g.values - expected)) <= 1e-11 * np.max(np.abs(expected))

    def test_exponential_action_pointwise(self, spec64):
        # Op(a) e_xi0 = a(., xi0) e_xi0, the symbol-recovery identity
        a = variable_symbol(spec64)
        xi0 = 7
        g = apply_symbol(a, make_exponential(spec64, xi0))
        table = a.base_values()
        expected = table[:, xi0 + spec64.freq_cutoff][:, None] * make_exponential(
            spec64, xi0
        ).values
        assert np.max(np.abs(g.values - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_linearity(self, spec64, rng):
        a = variable_symbol(spec64)
        b = bessel_symbol(spec64, 1.0)
        f = random_band_limited(spec64, rng)
        lhs = apply_symbol(
            ScalarSymbol(spec64, a.params, a.margin, a.values + 2j * b.values), f
        )
        rhs = apply_symbol(a, f) + 2j * apply_symbol(b, f)
        assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-11 * np.max(np.abs(rhs.values))

    def test_shape_mismatch(self, spec64, spec8):
        with pytest.raises(ValueError):
            apply_symbol(constant_symbol(spec64), make_exponential(spec8, 1))


class TestMaterialize:
    def test_identity(self, spec8, rng):
        m = materialize(constant_symbol(spec8))
        f = random_band_limited(spec8, rng)
        assert np.max(np.abs(m.apply(f).values - f.values)) < 1e-12

    def test_multiplier_diagonalized_by_exponentials(self, spec64):
        nu = 1.5
        m = materialize(frac_laplacian_symbol(spec64, nu))
        d = multiplier_diagonal(m)
        assert d is not None
        freqs = np.abs(spec64.axis_frequencies().astype(float))
        assert np.max(np.abs(d.real - (2 * np.pi) ** nu * freqs**nu)) < 1e-9

    def test_agrees_with_apply(self, spec64, rng):
        a = variable_symbol(spec64)
        m = materialize(a)
        for _ in range(3):
            f = random_band_limited(spec64, rng)
            direct = apply_symbol(a, f)
            assert np.max(np.abs(m.apply(f).values - direct.values)) <= 1e-11 * np.max(
                np.abs(direct.values)
            )

    def test_variable_not_diagonal(self, spec64):
        assert multiplier_diagonal(materialize(variable_symbol(spec64))) is None


class TestExtractSymbol:
    def test_identity_operator(self, spec8):
        a = extract_symbol(identity_operator(spec8))
        assert np.max(np.abs(a.values - 1.0)) < 1e-12

    def test_round_trip_multiplier(self, spec64):
        a = frac_laplacian_symbol(spec64, 1.0)
        b = extract_symbol(materialize(a))
        scale = np.max(np.abs(a.base_values()))
        assert np.max(np.abs(b.values - a.base_values())) <= 1e-10 * scale

    def test_round_trip_variable(self, spec64):
        a = variable_symbol(spec64)
        b = extract_symbol(materialize(a))
        scale = np.max(np.abs(a.base_values()))
        assert np.max(np.abs(b.values - a.base_values())) <= 1e-10 * scale

    def test_requires_single_channel(self, spec8):
        with pytest.raises(ValueError):
            extract_symbol(identity_operator(spec8, channels=2))


class TestAdjoint:
    def test_real_multiplier_self_adjoint(self, spec64):
        m = materialize(frac_laplacian_symbol(spec64, 2.0))
        assert np.max(np.abs(adjoint(m).matrix - m.matrix)) < 1e-9

    def test_imaginary_multiplier_skew(self, spec64):
        b = bessel_symbol(spec64, 0.0)
        m = materialize(ScalarSymbol(spec64, b.params, b.margin, 1j * b.values))
        assert np.max(np.abs(adjoint(m).matrix + m.matrix)) < 1e-12

    def test_involution(self, spec64):
        m = materialize(variable_symbol(spec64))
        assert np.array_equal(adjoint(adjoint(m)).matrix, m.matrix)

    def test_pairing(self, spec64, rng):
        m = materialize(variable_symbol(spec64))
        ma = adjoint(m)
        for _ in range(3):
            u = random_band_limited(spec64, rng)
            v = random_band_limited(spec64, rng)
            lhs = l2_inner_product(m.apply(u), v)
            rhs = l2_inner_product(u, ma.apply(v))
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


class TestCompose:
    def test_identity_neutral(self, spec8):
        m = materialize(bessel_symbol(spec8, 1.0))
        c = compose(m, identity_operator(spec8))
        assert np.max(np.abs(c.matrix - m.matrix)) < 1e-13
        assert c.order == m.order

    def test_multipliers_commute(self, spec64):
        m1 = materialize(bessel_symbol(spec64, 1.0))
        m2 = materialize(frac_laplacian_symbol(spec64, 0.5))
        ab = compose(m1, m2).matrix
        ba = compose(m2, m1).matrix
        assert np.max(np.abs(ab - ba)) <= 1e-11 * np.max(np.abs(ab))

    def test_multiplier_after_anything_is_product(self, spec64):
        # x-independent second factor: composition symbol is the plain product
        a1 = sine_symbol(spec64)
        a2 = bessel_symbol(spec64, 1.0)
        sym = extract_symbol(compose(materialize(a1), materialize(a2)))
        expected = a1.base_values() * a2.base_values()
        assert np.max(np.abs(sym.values - expected)) <= 1e-10 * np.max(np.abs(expected))


class TestOperatorFunction:
    def test_identity_function(self, spec64):
        p = symmetrize_positive(materialize(frac_laplacian_symbol(spec64, 2.0)))
        g = operator_function(p, lambda w: w)
        assert np.max(np.abs(g.matrix - p.matrix)) <= 1e-9 * np.max(np.abs(p.matrix))

    def test_multiplier_sqrt(self, spec64):
        p = symmetrize_positive(materialize(frac_laplacian_symbol(spec64, 2.0)))
        ip = identity_operator(spec64) + p
        root = operator_function(ip, np.sqrt, order=1.0)
        d = multiplier_diagonal(root)
        assert d is not None
        freqs = np.abs(spec64.axis_frequencies().astype(float))
        expected = np.sqrt(1.0 + (2 * np.pi * freqs) ** 2)
        assert np.max(np.abs(d.real - expected)) < 1e-9

    def test_sqrt_squares_back(self, spec64):
        from torpde.corpus import variable_positive_operator

        p = variable_positive_operator(spec64, 2.0, amp=0.5)
        ip = identity_operator(spec64) + p
        root = operator_function(ip, np.sqrt, order=1.0)
        err = np.linalg.norm(compose(root, root).matrix - ip.matrix, 2)
        assert err <= 1e-10 * np.linalg.norm(ip.matrix, 2)

    def test_rejects_non_hermitian(self, spec64):
        m = materialize(sine_symbol(spec64))  # multiplication by sin is fine...
        skew = DenseOperator(spec64, 1, m.matrix + 1j * np.eye(64) @ m.matrix, 0.0)
        with pytest.raises(ValueError):
            operator_function(skew, np.sqrt)

    def test_rejects_undefined_function(self, spec64):
        p = symmetrize_positive(materialize(frac_laplacian_symbol(spec64, 1.0)))
        with pytest.raises(ValueError):
            operator_function(p, lambda w: 1.0 / w)  # zero mode at xi = 0

    def test_multiplier_functional_consistency(self, spec64):
        # g(Op(m)) equals Op(g o m) for multipliers
        p = symmetrize_positive(materialize(frac_laplacian_symbol(spec64, 2.0)))
        g = operator_function(p, lambda w: np.exp(-w / 1000.0))
        d = multiplier_diagonal(g)
        freqs = np.abs(spec64.axis_frequencies().astype(float))
        expected = np.exp(-((2 * np.pi * freqs) ** 2) / 1000.0)
        assert np.max(np.abs(d.real - expected)) <= 1e-11 * np.max(expected)

    def test_eigendecomposition_reconstructs(self, spec64):
        from torpde.corpus import variable_positive_operator

        p = variable_positive_operator(spec64, 2.0, amp=0.5)
        eig = hermitian_eigendecomposition(p)
        err = np.linalg.norm(eig.reconstruct() - p.matrix, 2)
        assert err <= 1e-9 * np.linalg.norm(p.matrix, 2)


class TestSymmetrizePositive:
    def test_positive_multiplier_unchanged(self, spec64):
        m = materialize(frac_laplacian_symbol(spec64, 2.0))
        p = symmetrize_positive(m)
        assert p.positive and p.hermitian
        assert np.max(np.abs(p.matrix - m.matrix)) <= 1e-12 * np.max(np.abs(m.matrix))

    def test_variable_symbol_needs_shift(self, spec64):
        # plain symmetrization dips below zero (Gaarding defect + band edge)
        m = materialize(variable_symbol(spec64))
        with pytest.raises(PositivityError):
            symmetrize_positive(m)
        p = symmetrize_positive(m, shift=1300.0)
        assert p.positive

    def test_negative_multiplier_rejected(self, spec64):
        b = bessel_symbol(spec64, 2.0)
        neg = materialize(ScalarSymbol(spec64, b.params, b.margin, -b.values))
        with pytest.raises(PositivityError):
            symmetrize_positive(neg)


class TestMatrixSymbols:
    def build(self, spec):
        return MatrixSymbol(
            (
                (bessel_symbol(spec, 1.0), sine_symbol(spec)),
                (variable_symbol(spec, 1.0), constant_symbol(spec)),
            )
        )

    def test_apply_matches_blocks(self, spec64, rng):
        msym = self.build(spec64)
        u = random_band_limited(spec64, rng, channels=2)
        out = apply_symbol(msym, u)
        for i in range(2):
            expected = sum(
                apply_symbol(msym.entries[i][j], u.channel(j)).values[..., 0]
                for j in range(2)
            )
            assert np.max(np.abs(out.values[..., i] - expected)) <= 1e-11 * max(
                np.max(np.abs(expected)), 1.0
            )

    def test_materialize_matches_apply(self, spec64, rng):
        msym = self.build(spec64)
        m = materialize(msym)
        u = random_band_limited(spec64, rng, channels=2)
        direct = apply_symbol(msym, u)
        assert np.max(np.abs(m.apply(u).values - direct.values)) <= 1e-11 * np.max(
            np.abs(direct.values)
        )

    def test_adjoint_pairing_two_channels(self, spec64, rng):
        m = materialize(self.build(spec64))
        ma = adjoint(m)
        for _ in range(3):
            u = random_band_limited(spec64, rng, channels=2)
            v = random_band_limited(spec64, rng, channels=2)
            lhs = l2_inner_product(m.apply(u), v)
            rhs = l2_inner_product(u, ma.apply(v))
            assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), 1.0)

    def test_requires_matching_channels(self, spec64, rng):
        with pytest.raises(ValueError):
            apply_symbol(self.build(spec64), random_band_limited(spec64, rng, channels=3))


def test_order_zero_norm_stable_under_refinement():
    norms = []
    for g, n in [(32, 7), (64, 15), (128, 31)]:
        spec = GridSpec(1, g, n)

        def fn(xs, xis):
            r = np.sqrt(sum(x * x for x in xis))
            return (1.0 + 0.5 * np.sin(2 * np.pi * xs[0])) * np.exp(
                1j * (2 * np.pi * r) ** 0.5
            )

        a = tabulate_symbol(spec, fn, SymbolClassParams(0.0, 0.5, 0.0))
        norms.append(materialize(a).operator_norm())
    assert norms[1] / norms[0] <= 1.1
    assert norms[2] / norms[1] <= 1.1


def test_operator_serialization_round_trip(tmp_path):
    spec = GridSpec(1, 8, 3)
    m = materialize(bessel_symbol(spec, 1.0))
    path = tmp_path / "op.txt"
    save_operator(m, path)
    back = load_operator(path)
    assert np.array_equal(back.matrix, m.matrix)
    assert back.order == m.order and back.spec == m.spec


def test_hermitian_flag_validated(spec8):
    mat = np.eye(8, dtype=complex)
    mat[0, 1] = 1.0
    with pytest.raises(ValueError):
        DenseOperator(spec8, 1, mat, 0.0, hermitian=True)
