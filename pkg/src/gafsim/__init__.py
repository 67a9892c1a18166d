"""gafsim: random zero sets of Gaussian entire functions in weighted
Fock spaces, with the statistics to compare them against a Poisson
baseline."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import Disc, Rect  # noqa: F401
from .measure import (RhoField, WeightSpec, dmu_approx,  # noqa: F401
                      doubling_ratio_scan, local_flatness_scan, mu_disc,
                      rho, weight_eval)
from .fock import (BasisModel, KernelModel, build_basis,  # noqa: F401
                   build_orthogonalized_basis, fast_decay_integral,
                   kernel_eval, kernel_log_diag, kernel_log_laplacian,
                   make_basis_kernel, make_frame_kernel)
from .pointprocess import (GafSample, SamplingSequence,  # noqa: F401
                           combine_seed, make_sampling_sequence, rng_stream,
                           sample_basis_gaf, sample_frame_gaf,
                           sample_poisson_pp, sampling_density_check)
from .zeros import (ZeroSet, count_zeros_argument,  # noqa: F401
                    linear_statistic, locate_zeros, locate_zeros_polyroots)
from .stats import (GaussianBump, PolynomialBump,  # noqa: F401
                    ek_expected, mean_bias_envelope, normality_conditions,
                    psi_mu_integral, variance_theoretical)
from .config import ExperimentConfig, load_config, parse_config  # noqa: F401
from .experiments import (StatReport, run_experiment,  # noqa: F401
                          hole_probability_experiment,
                          kernel_diagnostics_experiment,
                          large_deviation_experiment,
                          normality_experiment,
                          poisson_baseline_experiment,
                          run_mean_variance_experiment, suggest_hole_grid)
