"""Coverage error metrics and performance benchmarks for robot swarms."""

__version__ = "0.1.0"

from .density import (GAUSSIAN, INDICATOR, Domain, GridSpec, Kernel, ScalarField, TargetDensity, default_ring,
                      default_ripple, kernel_value, make_gridded, make_ring, make_ripple)
from .errors import (AnalysisError, EfficiencyError, EvaluationError, FitError, InputError, ParameterError,
                     QuadratureResolutionError, SettlingError, StatisticalTestError, SwarmCovError)
from .kernels import BACKEND
from .metric import (Partition, SwarmConfig, Trajectory, blob_function, cumulative_error, discretization_error,
                     error, error_series, one_sided_error, pitfall_report, reference_error)
from .quadrature import QuadratureRule, convergence_study, default_rule, integrate
from .extrema import (ExtremaResult, OptimizerSettings, design_sweep, find_extrema, maximize_error, minimize_error,
                      minimize_error_with_delta)
from .statistics import (ErrorDistribution, benchmark_controller, estimate_error_distribution, relative_error,
                         sample_positions, settling_analysis, two_sample_f_test, two_sample_t_test)
from .controller import WalkerSettings, run_walkers
