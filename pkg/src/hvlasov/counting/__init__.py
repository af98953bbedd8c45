"""Projection and counting operator calculus, mean-field error functionals and audits."""

from .algebra import (CountingWeight, DiscreteState, apply_projection, apply_weight, beta_exact,
                      count_distribution, m_value)
from .envelope import ENVELOPE_FORMULA, ErrorEnvelope, error_envelope, product_datum_constant
from .estimator import MonteCarloParams, estimate_q1, sample_product
from .identities import CHECKS, identity_residuals, identity_suite, surrogate_gap
from .inequalities import CutoffSpec, cutoff_residual, opnorm_residuals, second_derivative_norm
from .pair import beta_rhs, pair_beta, pair_q1, pair_to_discrete, pair_weighted_inner

__all__ = [
    "CHECKS",
    "CountingWeight",
    "CutoffSpec",
    "DiscreteState",
    "ENVELOPE_FORMULA",
    "ErrorEnvelope",
    "MonteCarloParams",
    "apply_projection",
    "apply_weight",
    "beta_exact",
    "beta_rhs",
    "count_distribution",
    "cutoff_residual",
    "error_envelope",
    "estimate_q1",
    "identity_residuals",
    "identity_suite",
    "m_value",
    "opnorm_residuals",
    "pair_beta",
    "pair_q1",
    "pair_to_discrete",
    "pair_weighted_inner",
    "product_datum_constant",
    "sample_product",
    "second_derivative_norm",
    "surrogate_gap",
]
