"""Influence diagrams over mixtures of truncated exponentials."""

from .diagram import (
    ChanceFactor,
    Diagnostic,
    InfluenceDiagram,
    TrueDist,
    UtilityFactor,
    validate_model,
    validate_order,
)
from .errors import MteError
from .fitting import (
    FitResult,
    FitSpec,
    compose_polynomial_utility,
    fit_linear_mte,
    fit_pdf,
    lognormal_oil_price,
    normal_template,
)
from .fusion import SolveResult, TraceEntry, fuse_step, solve
from .model_io import (
    bundled_model_path,
    load_model,
    load_policy,
    save_model,
    save_policy,
    save_trace,
)
from .oracle import QuadResult, monte_carlo_eu, quad_integrate
from .potentials import (
    CONTINUOUS,
    DECISION,
    DISCRETE,
    PROBABILITY,
    UTILITY,
    CrossingSet,
    ExpTerm,
    MtePiece,
    MtePotential,
    PolicyRule,
    Region,
    Variable,
    add,
    combine,
    constant_potential,
    evaluate,
    find_crossings,
    marginalize_continuous,
    marginalize_discrete,
    max_marginalize_decision,
    normalize_density,
    restrict,
    scale,
)

__version__ = "0.1.0"
