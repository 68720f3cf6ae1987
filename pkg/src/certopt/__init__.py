"""Certified multi-fidelity zeroth-order optimization toolkit."""

from .complexity import (
    ComplexityProfile,
    EpsSchedule,
    best_certificate_oracle,
    dominance_violations,
    eps_schedule,
    expansion_constant,
    integral_approximation,
    layer_packing,
    lower_bound_prediction,
    packing_cost_sum,
    upper_bound_prediction,
)
from .costs import ConstantCost, PowerLawCost, SamplingCost, TabulatedCost, build_cost
from .environments import (
    BumpParams,
    Environment,
    StochasticSampler,
    bump_value,
    make_bump,
    perturbed_objective,
)
from .geometry import (
    NodeId,
    Partition,
    SearchDomain,
    dyadic_sup_partition,
    find_unit_step,
    grid_points,
    packing_number,
    verify_assumptions,
)
from .objectives import (
    Objective,
    check_lipschitz,
    load_table,
    make_builtin,
    suboptimality_gap,
)
from .search import (
    RunOutcome,
    TraceRow,
    certificate_validity_check,
    run_search,
    write_trace_csv,
)
from .stochastic import (
    StochasticOutcome,
    batch_size,
    monte_carlo,
    risk_weight,
    run_stochastic,
    sampling_cost,
)

__version__ = "0.1.0"
