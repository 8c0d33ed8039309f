"""Moving-window harmonic least squares with Richardson iteration and direct baselines."""
from .eigen import EigenEstimate, PowerConfig, min_eigen_inverse, min_eigen_shifted, power_iterate
from .errors import (BadSpectrum, ConfigError, Diverging, NotConverged, NotSymmetric, ParseError,
                     RichwinError, ShiftTooSmall, SingularPivot, SNearSingular, WindowTooSmall, ZeroVector)
from .harness import ScenarioConfig, ScenarioReport, SignalSpec, generate, run_scenario
from .linalg import (LdlFactors, condition_estimate, frobenius_norm, gauss_solve, invert_via_ldl,
                     ldl_decompose, max_row_sum_norm)
from .recursive import CorrectionPolicy, RecursiveEstimator, RecursiveState
from .richardson import (Preconditioner, RichardsonConfig, RichardsonResult, newton_schulz_correct,
                         precond_optimal, precond_simplest, precond_suboptimal, solve)
from .window import HarmonicBasis, RankTwoUpdate, WindowState, default_basis, regressor, warm_start

__version__ = "0.1.0"
