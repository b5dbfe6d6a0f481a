"""Fisher-information metrology of bosonic probes under linear and Kerr generators."""

__version__ = "0.1.0"

from .algebra import (
    NormalPolynomial,
    ParseError,
    adjoint,
    coherent_expectation,
    excess,
    format_polynomial,
    formal_square,
    multiply,
    parse_expression,
)
from .fock import (
    DensityMatrix,
    FockSpace,
    OperatorMatrix,
    TruncationError,
    annihilator_matrix,
    choose_dim,
    coherent_vector,
    eigh,
    evolve,
    realize,
    tensor_product,
)
from .generators import (
    SU2,
    Custom,
    Kerr,
    Number,
    Quadrature,
    Squeeze,
    coherent_qfi,
    excess_catalog,
    polynomial,
)
from .metrology import (
    MetrologyReport,
    classical_bound,
    lambda2,
    proposition_test,
    qfi,
    qfi_pure,
    witness,
)
from .probes import (
    ClassicalMix,
    Coherent,
    Fock,
    SqueezedVacuum,
    TwoModeCoherent,
    VacuumDoped,
    auto_space,
    build_density,
    matched_coherent,
    mean_photons,
)

__all__ = ["__version__"] + [
    "NormalPolynomial",
    "ParseError",
    "adjoint",
    "coherent_expectation",
    "excess",
    "format_polynomial",
    "formal_square",
    "multiply",
    "parse_expression",
    "DensityMatrix",
    "FockSpace",
    "OperatorMatrix",
    "TruncationError",
    "annihilator_matrix",
    "choose_dim",
    "coherent_vector",
    "eigh",
    "evolve",
    "realize",
    "tensor_product",
    "SU2",
    "Custom",
    "Kerr",
    "Number",
    "Quadrature",
    "Squeeze",
    "coherent_qfi",
    "excess_catalog",
    "polynomial",
    "MetrologyReport",
    "classical_bound",
    "lambda2",
    "proposition_test",
    "qfi",
    "qfi_pure",
    "witness",
    "ClassicalMix",
    "Coherent",
    "Fock",
    "SqueezedVacuum",
    "TwoModeCoherent",
    "VacuumDoped",
    "auto_space",
    "build_density",
    "matched_coherent",
    "mean_photons",
]
