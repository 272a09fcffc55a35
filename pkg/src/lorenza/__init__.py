"""Low-rank adaptive SAM with zeroth-order ascent estimation, plus baselines and a benchmark harness."""
from .adazo import AdazoConfig, AdazoState, adazo_init, adazo_step
from .baselines import (AdamConfig, AdamState, SamConfig, SamState, adam_init, adam_step,
                        lowrank_adam_step, sam_init, sam_step)
from .core import (DimensionError, NumericalError, RankDeficiencyError, RngStream, frobenius_norm,
                   qr_thin, sample_gaussian)
from .checkpoint import CheckpointError, checkpoint_load, checkpoint_save
from .harness import MemoryReport, RunConfig, basin_statistics, memory_report, run_experiment, run_grid
from .lowrank import (LorenzaConfig, LorenzaLayerState, LorenzaState, gsam_decompose, lorenza_init,
                      lorenza_step, lowrank_perturbation, maybe_refresh_subspace)
from .objectives import (GradSet, ObjectiveOracle, ParamSet, double_well_objective, finite_diff_gradient,
                         load_regression_csv, matrix_factorization_objective, mlp_objective,
                         quadratic_objective)
from .rge import DirectionSpec, ZoEstimate, ascent_perturb, estimate_gradient
from .schedules import RhoSchedule, cosine_lr, rho_schedule
from .ssrf import Subspace, approximation_error, ssrf

__version__ = "0.1.0"
