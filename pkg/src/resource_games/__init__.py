"""Resource quantifiers, witness games and single-shot information bounds for state-measurement pairs."""
from .errors import (
    CompletionInfeasibleError,
    DegenerateWitnessError,
    InvalidInputError,
    MalformedJSONError,
    MalformedProgramError,
    NotTraceNonincreasingError,
    PreconditionError,
    ResourceGamesError,
    SolverError,
    UnsupportedFreeSetError,
)
from .freesets import FreeMeasurementSet, FreeStateSet, free_set_from_descriptor
from .games import (
    GameBlueprint,
    build_discrimination_game,
    build_exclusion_game,
    certify_result1,
    certify_result2,
    eval_discrimination,
    eval_exclusion,
    free_pair_optimum,
)
from .infotheory import JointDistribution, certify_result3, joint_from_task, mutual_info_minus, mutual_info_plus
from .linalg import ChannelEnsemble, Povm, Subchannel, SubchannelSet, complete_to_instrument
from .quantifiers import robustness_measurement, robustness_state, weight_measurement, weight_state

__version__ = "0.1.0"
