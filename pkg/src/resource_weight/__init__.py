"""Weight and robustness resource quantifiers with exclusion and discrimination games."""

from .exclusion import (
    Povm,
    StateEnsemble,
    check_exclusion_optimality,
    max_succ_discrimination,
    min_error_exclusion,
    perr_exclusion_fixed,
    psucc_discrimination_fixed,
    simulate_play,
)
from .free_sets import (
    Hull,
    Incoherent,
    PptBipartite,
    max_linear_over_free,
    membership,
    min_linear_over_free,
    parse_free_set,
    sample_free,
)
from .info import (
    ExtendedReal,
    JointDistribution,
    h_minus_inf,
    h_minus_inf_cond,
    h_plus_inf,
    h_plus_inf_cond,
    info_advantage,
    mutual_accessible_info,
    mutual_exclusion_info,
)
from .linalg import TOL, SolverError, herm_eig, operator_norm, partial_transpose, random_density, trace_norm
from .quantifiers import RobustnessCertificate, WeightCertificate, robustness, weight, witness_from_dual
from .sdp import SdpBuilder, SdpProblem, SdpSolution, SolverOptions, solve
from .subchannels import (
    Subchannel,
    SubchannelEnsemble,
    build_binary_dual_game,
    build_dual_game,
    build_robustness_game,
    build_witness_game,
    check_result3_conditions,
    perr_subchannel,
    psucc_subchannel,
    qc_ratio_discrimination,
    qc_ratio_independent,
    qc_ratio_shared,
    shift_unitaries,
)
from .verify import run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
