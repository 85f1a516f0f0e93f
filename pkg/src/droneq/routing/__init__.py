"""Energy-constrained capacitated drone routing."""

from .instance import (
    BatchOfRoutes,
    ConstraintCheck,
    InfeasibleInstanceError,
    Route,
    RoutingInstance,
    ValidationReport,
    batch_energy,
    batch_time,
    batch_total_time,
    build_instance,
    exhaustive_optimum,
    make_batch,
    validate_batch,
)
from .relocation import (
    DegenerateRelocationError,
    RelocationQubo,
    SlotRejectedError,
    apply_relocation,
    build_relocation_qubo,
    delta_transit,
    remove_customer,
    two_edge_delta,
)
from .savings import savings_init
from .search import (
    PAPER_ITERATIONS,
    Move,
    RoutingConfig,
    RoutingResult,
    local_search_pass,
    multi_start_route,
    perturb,
    perturb_strength,
)
