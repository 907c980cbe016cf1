"""Exact reduced dynamics of finite system+environment models.

Build a model, evolve the joint state, and test divisibility of the reduced
dynamical map and the persistence of coherence against commutator
properties of the Hamiltonians.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ContractError,
    DegenerateEnvironmentError,
    DimensionError,
    OpenMapError,
    ParameterError,
    ScenarioError,
    UnsupportedInputError,
    ValidationError,
)
from .linalg import HilbertSpec, commutator_norm, kron, partial_trace_env, unitary_from_hamiltonian  # noqa: E402
from .models import (  # noqa: E402
    HamiltonianTriple,
    ModelParams,
    boson_ops,
    build_custom_model,
    build_dephasing_model,
    build_jsquared_model,
    build_model,
    counterexample_model,
    spin_ops,
)
from .dynamics import (  # noqa: E402
    InitialState,
    SuperMap,
    TimeGrid,
    apply_map,
    env_correlation,
    evolve_joint,
    markov_condition_check,
    reduced_state,
    reduced_states,
    super_matrix,
)
