"""Exchangeable-weight bootstrap schemes, their large-deviation rate
functions, and tilted Monte Carlo verification of the decay rates."""

from .measures import (
    AtomicWeightMeasure,
    FiniteMeasure,
    JointFiniteMeasure,
    Kernel,
    bounded_metric,
    entropy_chain_check,
    push_forward_scale,
    rebalance_atoms,
    relative_entropy,
    tv_distance,
    w1_line,
)
from .samplers import SchemeConfig, couple_poisson_multinomial, stream
from .transforms import (
    BinomialCgf,
    CgfSpec,
    ScaledPoissonCgf,
    TabulatedCgf,
    cgf_scaled_poisson,
    gargamel_condition,
    legendre_binomial,
    legendre_numeric,
    legendre_scaled_poisson,
)

__all__ = [
    "AtomicWeightMeasure",
    "BinomialCgf",
    "CgfSpec",
    "FiniteMeasure",
    "JointFiniteMeasure",
    "Kernel",
    "ScaledPoissonCgf",
    "SchemeConfig",
    "TabulatedCgf",
    "bounded_metric",
    "cgf_scaled_poisson",
    "couple_poisson_multinomial",
    "entropy_chain_check",
    "gargamel_condition",
    "legendre_binomial",
    "legendre_numeric",
    "legendre_scaled_poisson",
    "push_forward_scale",
    "rebalance_atoms",
    "relative_entropy",
    "stream",
    "tv_distance",
    "w1_line",
]

__version__ = "0.1.0"
