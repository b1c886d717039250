"""Process matrices, causal-order discrimination, and observability checks."""

from .config import Tolerances
from .linalg import (
    ComplexMatrix,
    is_psd,
    kron,
    partial_trace,
    permute_subsystems,
    trace_distance,
)
from .objects import (
    ChoiMap,
    DensityOperator,
    Instrument,
    Povm,
    Pvm,
    apply_channel,
    choi_from_kraus,
    compose,
    depolarizing_choi,
    identity_choi,
    pauli_channel,
    permutation_dephasing_channel,
    validate_instrument,
)
from .processes import (
    ProcessMatrix,
    Site,
    SiteRegistry,
    born_probability,
    fully_mixed_process,
    is_causally_strict,
    markov_process,
    permute_sites,
    signals,
    validate_process,
)
from .discrimination import (
    Intervention,
    OutcomeDistribution,
    RoutedAncillaWiring,
    SharedAncillaWiring,
    WiringSignallingError,
    coarse_grain,
    encode_outcomes,
    from_product_strategy,
    parity_protocol,
    perfectly_discriminates,
    result_space_distribution,
    run,
    validate_intervention,
)
from .observables import (
    CausalClass,
    ClassRepresentative,
    channel_orthogonality_defect,
    check_condition1,
    class_representative,
    compensation_basis,
    condition3_counterexample,
    counting_bound,
    delta_classify,
    min_dimension_sweep,
    pauli_linked_classes,
    pauli_pair_protocol,
    permuted_ensemble,
    smallest_obstructed_n,
)

__all__ = [
    "Tolerances",
    "ComplexMatrix", "is_psd", "kron", "partial_trace",
    "permute_subsystems", "trace_distance",
    "ChoiMap", "DensityOperator", "Instrument", "Povm", "Pvm",
    "apply_channel", "choi_from_kraus", "compose", "depolarizing_choi",
    "identity_choi", "pauli_channel", "permutation_dephasing_channel",
    "validate_instrument",
    "ProcessMatrix", "Site", "SiteRegistry", "born_probability",
    "fully_mixed_process", "is_causally_strict", "markov_process",
    "permute_sites", "signals", "validate_process",
    "Intervention", "OutcomeDistribution", "RoutedAncillaWiring",
    "SharedAncillaWiring", "WiringSignallingError", "coarse_grain",
    "encode_outcomes", "from_product_strategy", "parity_protocol",
    "perfectly_discriminates", "result_space_distribution", "run",
    "validate_intervention",
    "CausalClass", "ClassRepresentative", "channel_orthogonality_defect",
    "check_condition1", "class_representative", "compensation_basis",
    "condition3_counterexample", "counting_bound", "delta_classify",
    "min_dimension_sweep", "pauli_linked_classes", "pauli_pair_protocol",
    "permuted_ensemble", "smallest_obstructed_n",
]
