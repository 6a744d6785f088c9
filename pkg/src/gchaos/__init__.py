"""Multiple G-Ito integrals, Hermite identities and sublinear expectations."""

from .catalog import Payoff, TimeFunction
from .gheat import PdeConfig, g_function, solve_gheat
from .hermite import (
    ChaosPolynomial,
    DegreeOverflowError,
    hermite_coeffs,
    hermite_coeffs_explicit,
    hermite_eval,
    hermite_scaled_eval,
)
from .ito import (
    GridFunction,
    SimplexFunction,
    corollary_closed_form,
    ito_integral,
    iterated_general,
    iterated_levels,
    iterated_product,
    multiple_integral,
    qv_integral,
    recursion_residual,
    theorem1_rhs,
)
from .scenario import (
    BangBang,
    BrownianPath,
    Constant,
    PathBatch,
    Piecewise,
    ScenarioPath,
    TimeGrid,
    VolatilityBounds,
    build_scenario,
    realized_qv_series,
    simulate_batch,
    simulate_paths,
)

__version__ = "0.1.0"
