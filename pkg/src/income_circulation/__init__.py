"""Income circulation matrices: wealth dynamics, cohesion and generosity."""

from .blocks import (
    ClassPartition,
    HoarderDecomposition,
    Regime,
    fragmented_asymptotics,
    hoarder_decompose,
    hoarder_limit,
    hoarder_power_closed_form,
    make_partition,
    order_by_wealth,
)
from .core import (
    IncomeCirculationMatrix,
    Trajectory,
    WealthVector,
    evolve,
    matrix_power,
    savings_diagonal,
    step,
    validate,
)
from .dynamics import (
    PerturbationSpec,
    SupportEvent,
    apply_support,
    perturbed_evolve,
    recovery_rate,
    support_experiment,
)
from .generosity import (
    GenerosityProfile,
    contraction_check,
    convergence_bound,
    generosity_profile,
)
from .graph import (
    CirculationGraph,
    PathWitness,
    SocietyClassification,
    Verdict,
    build_graph,
    classify,
    exponent,
    paths_of_length,
    period,
    shortest_path_witness,
    strongly_connected_components,
)
from .ingest import (
    EstimationWindow,
    TransactionRecord,
    average_icm,
    estimate_icm,
    synthesize_economy,
)

__version__ = "0.1.0"
