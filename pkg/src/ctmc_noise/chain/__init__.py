"""Generators, stationary laws and the model zoo."""

from .generator import (
    DENSE_LIMIT,
    STRUCTURE_TAGS,
    Generator,
    NotReversibleError,
    ReducibleChainError,
    StationaryDistribution,
    ValidationReport,
    check_detailed_balance,
    group_inverse,
    is_irreducible,
    matrix_autocorrelation,
    pi_inner_product,
    product_form_stationary,
    resolvent_psd,
    stationary_distribution,
    transition_matrix,
    validate_generator,
)
from .birth_death import (
    BirthDeathRates,
    birth_death_char_polys,
    birth_death_eigvec_coeffs,
    char_poly_roots,
)
from .models import (
    MODEL_KINDS,
    OBSERVABLES,
    QUEUE_KINDS,
    HeavyTrafficConfig,
    ModelSpec,
    QueueMoments,
    ToeplitzModes,
    ToeplitzParams,
    birth_death_generator,
    light_traffic_eigenvalues,
    mm1_gamma_scaling,
    mm1_generator,
    mm1_moments,
    open_mm1_spectrum,
    ring_eigenvalues,
    ring_gamma_closed_form,
    ring_generator,
    star_generator,
    telegraph_generator,
    toeplitz_eigenvalues,
    toeplitz_eigenvectors,
)

__all__ = [
    "DENSE_LIMIT",
    "STRUCTURE_TAGS",
    "Generator",
    "NotReversibleError",
    "ReducibleChainError",
    "StationaryDistribution",
    "ValidationReport",
    "check_detailed_balance",
    "group_inverse",
    "is_irreducible",
    "matrix_autocorrelation",
    "pi_inner_product",
    "product_form_stationary",
    "resolvent_psd",
    "stationary_distribution",
    "transition_matrix",
    "validate_generator",
    "BirthDeathRates",
    "birth_death_char_polys",
    "birth_death_eigvec_coeffs",
    "char_poly_roots",
    "MODEL_KINDS",
    "OBSERVABLES",
    "QUEUE_KINDS",
    "HeavyTrafficConfig",
    "ModelSpec",
    "QueueMoments",
    "ToeplitzModes",
    "ToeplitzParams",
    "birth_death_generator",
    "light_traffic_eigenvalues",
    "mm1_gamma_scaling",
    "mm1_generator",
    "mm1_moments",
    "open_mm1_spectrum",
    "ring_eigenvalues",
    "ring_gamma_closed_form",
    "ring_generator",
    "star_generator",
    "telegraph_generator",
    "toeplitz_eigenvalues",
    "toeplitz_eigenvectors",
]
