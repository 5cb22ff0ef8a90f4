"""Data projection of non-characteristic Cauchy data and Carrier-Greenspan run-up."""

from .core import (Grid, GridFunction, HyperbolicSystem1D, Manifold, ManifoldIC, MatrixField,
                   apply_D, characteristic_matrix, derivative, noncharacteristic_margin,
                   swe_system)
from .crosscheck import CrossCheckReport, cross_check
from .errors import (BreakingError, CGRunupError, CharacteristicPointError, HodographFoldError,
                     HorizonError, InstabilityError, NumericalFailure, OrderGridMismatchError,
                     PostBreakingError, ScenarioError, SpectralResolutionError)
from .evolver import HodographSolution, evolve_fd
from .hankel import KGrid, SpectralCoefficients, evolve_spectral, hankel_analyze, hankel_evaluate
from .hodograph import (PhysicalIC, PhysicalSnapshot, check_nonbreaking, forward_cg,
                        inverse_cg_snapshot, plane_beach, shoreline_series, tabulated_profile)
from .pipeline import PipelineConfig, run_pipeline
from .projection import ProjectionResult, choose_order, project, projection_step

__version__ = "0.1.0"
