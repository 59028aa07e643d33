"""Pattern recovery of blocky signals: FLSA, preconditioned fused Lasso, IC diagnostics."""

from .design import (center_response, centered_design_apply, mu_from_theta,
                     reconstruct_mu, theta_from_mu)
from .errors import (ConvergenceError, InvalidInputError, InvalidParameterError,
                     InvalidPartitionError, InvalidSetupError, RankDeficiencyError,
                     SingularityError)
from .flsa import FusionPath, apply_lambda1, flsa_fit, flsa_path, flsa_solve, qp_oracle
from .ic import (ICReport, JumpSet, ic_magnitudes, kkt_sign_recovery, structural_ic,
                 support_from_signal, theorem1_bound, tridiag_inverse)
from .puffer import (precondition_scores, preconditioned_fit, soft_threshold,
                     svd_centered_design, theorem6_bound)
from .signal_model import (StepwiseSignal, jump_pattern, make_stepwise, paper_signal,
                           pattern_loss, sample_noisy)

__version__ = "0.1.0"
