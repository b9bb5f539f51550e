"""Detection of rare and weak signals: higher criticism, LLR tests, boundaries and limit laws."""
from .shapes import ShapeFunction
from .distributions import (Chimeric, DetectionModel, NoiseFamily, NormalShift, Perturbation, epsilon, kappa,
                            make_stream, mixture_density_ratio, perturbation_admissible, sample_alternative,
                            sample_null, signal_density_ratio, theta, to_pvalues)
from .statistics import HcValue, LlrValue, hc_asymptotic_critical, hc_normalizers, hc_statistic, llr_statistic, \
    zn_statistic
from .detectability import (ISumReport, Region, RegionLabel, boundary_chimeric, boundary_normal_dense,
                            boundary_normal_sparse, boundary_powerlaw, classify_region, hellinger_sum, hn_v, i_sums,
                            log_exponent_E, total_variation)
from .limits import (LevyTriple, LimitPair, cf_eval, gamma_from_eta, gaussian_pair, lebesgue_shift, sample_limit,
                     triple_beta1, triple_chimeric_boundary, triple_normal_beta1, triple_normal_quadratic,
                     triple_powerlaw_boundary, truncate_model)
from .efficiency import are, are_shapes, gamma_cross, mismatched_power
from .montecarlo import ExperimentConfig, PowerEstimate, estimate_power, mc_critical_value, phase_sweep

__version__ = "0.1.0"
