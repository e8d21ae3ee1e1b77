"""Discrete-time stochastic analysis on finite Bernoulli spaces.

Random variables are dense tables over ``{-1, 1}**(N+1)``, so every identity
of the calculus (chaos expansion, gradient and divergence, Clark formula,
covariance representations, entropy bounds, binomial hedging) reduces to a
finite sum that can be checked exactly by enumeration.
"""
from . import crr, errors, identities, inequalities, kernels, malliavin
from .chaos import (
    ChaosExpansion,
    KrawtchoukTable,
    SymmetricKernel,
    chaos_truncate,
    expansion_from_kernels,
    kernel_of_order,
    krawtchouk_check,
    multiple_integral,
    symmetrize,
    walsh_decompose,
    walsh_reconstruct,
)
from .crr import (
    CrrModel,
    HedgingStrategy,
    build_model,
    change_of_variable_check,
    hedge,
    payoff_builder,
    price_claim,
    stock_price,
)
from .identities import (
    ClarkDecomposition,
    clark,
    clark_from,
    covariance_clark,
    covariance_direct,
    covariance_iterated,
    covariance_semigroup,
    fkg_check,
    martingale_representation,
    poincare_sides,
    variance_sandwich,
)
from .inequalities import (
    deviation_bound_gaussian,
    deviation_bound_poisson_type,
    entropy,
    exact_tail,
    lsi_l1_rhs,
    lsi_modified_rhs,
    lsi_optimal_rhs,
    lsi_sharp_rhs,
    one_dim_sharp_residual,
)
from .malliavin import (
    GradientField,
    divergence,
    divergence_pointwise,
    gradient,
    gradient_all,
    nabla,
    ou_operator,
    resolvent,
    semigroup,
    semigroup_kernel,
)
from .space import (
    BernoulliSpace,
    ProcessRV,
    RandomVariable,
    SkorohodProcess,
    conditional_expectation,
    expectation,
    integral,
    integral_partial,
    new_space,
    outcome_probability,
    s_rv,
    x_rv,
    y_rv,
)

__version__ = "0.1.0"
