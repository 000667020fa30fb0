"""Global pseudo-differential calculus on the torus.

Grid-level Fourier analysis on T^n, tabulated symbols with class diagnostics,
quantization and operator calculus, asymptotic expansions with remainder-order
verification, and a well-posed solver for u_tt = -P(x,D)u + w driven by
positive elliptic operators, with machine-checked energy estimates.
"""

from .calculus import (
    ExpansionResult,
    adjoint_expansion,
    composition_expansion,
    remainder_order_estimate,
)
from .grid import (
    GridFunction,
    GridSpec,
    SpectralCoeffs,
    forward_transform,
    inverse_transform,
    japanese_bracket,
    l2_inner_product,
    l2_norm,
    make_exponential,
    random_band_limited,
    sobolev_norm,
)
from .hyperbolic import (
    CauchyData,
    EnergyLedger,
    FirstOrderSystem,
    Forcing,
    SolverConfig,
    build_first_order_system,
    check_zero_order_condition,
    conserved_energy_probe,
    solve_first_order,
    solve_wave,
    step,
    verify_energy_estimate,
)
from .quantize import (
    DenseOperator,
    adjoint,
    apply_symbol,
    compose,
    extract_symbol,
    identity_operator,
    materialize,
    operator_function,
    symmetrize_positive,
)
from .symbols import (
    MatrixSymbol,
    ScalarSymbol,
    SymbolClassParams,
    bessel_symbol,
    builtin_symbol,
    class_membership_probe,
    difference_binomial,
    ellipticity_check,
    forward_difference,
    frac_laplacian_symbol,
    oscillating_symbol,
    seminorm_estimate,
    strong_ellipticity_check,
    variable_coefficient_symbol,
    x_derivative,
)

__version__ = "0.1.0"
