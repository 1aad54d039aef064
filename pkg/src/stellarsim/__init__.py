"""stellarsim: coherent-state sampler reductions of small bosonic computations.

The package evaluates outcome probabilities of bosonic sampling setups three
ways and keeps the routes honest against each other: a brute-force truncated
Fock oracle, a physically assembled coherent-state sampler with auxiliary
single photons and weak two-mode squeezers, and an exact loop-hafnian kernel
whose cost scales with the stellar rank of the setup.  A Q-function sampler
for passively separable states and a CLI for instance files and xi sweeps
round out the toolbox.
"""

from .errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    DimensionTooLargeError,
    EnvelopeFailureError,
    NonSquareError,
    NonSymmetricError,
    NormalizationError,
    OddDimensionWarning,
    ParseError,
    PhotonNumberMismatchError,
    PlanMismatchError,
    RankBudgetTooSmallError,
    StellarSimError,
    UnderflowRiskError,
    ZeroProjectionError,
)
from .fock import (
    CoreState,
    TruncatedState,
    husimi_q,
    inner_product,
    rank_truncate,
    stellar_function_eval,
    stellar_rank,
    tensor,
    to_truncated,
    truncated_coherent,
)
from .gadget import (
    GadgetPlan,
    addition_gadget,
    attenuated_subtract,
    build_attenuated_projector,
    choose_xi,
    moment_bound_constant,
    subtraction_gadget,
    trace_distance_pure,
)
from .gaussian import (
    BeamSplitter,
    BogoliubovMap,
    Displacement,
    GaussianCircuit,
    Phase,
    ProjectorSpec,
    Squeeze,
    TwoModeSqueeze,
    apply,
    apply_passive_unitary,
    build_projector_state,
    gate_matrix,
    haar_unitary,
)
from .numerics import brute_force_matching_sum, hafnian, loop_hafnian, permanent
from .qsample import SeparableDecomposition, sample_separable, single_mode_q_sample
from .sampler import (
    InputState,
    SamplerSetup,
    StrongSimResult,
    bs_probability,
    build_sampler,
    estimate_probability,
    exact_probability,
    fock_outcome,
    gbs_probability,
    marginal_probability,
    strong_simulate,
)

__version__ = "0.1.0"
