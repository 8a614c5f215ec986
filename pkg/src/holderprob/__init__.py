"""Probabilistic analysis of the Hölder ratio: constants, samplers, limit
theorems checked by simulation, and large/moderate deviation rates."""

from .constants import (ConjugatePair, LimitConstants, conjugate, covariance_gamma_form,
                        covariance_moment_form, gamma_moment, limit_constants)
from .empirical import (EmpiricalDistribution, GaussianKolmogorovFit, dkw_bound,
                        kolmogorov_distance, normal_cdf, two_sample_dkw_bound, two_sample_ks)
from .exceptions import (ConfigError, ConvergenceError, DegenerateRatioWarning, DomainError,
                         SamplerError)
from .rates import (MeanPoint, OptimizerSpec, QuadratureSpec, TiltPoint, cgf_derivatives,
                    cgf_grid, cgf_lambda, ldp_rate, legendre_star, mdp_rate, solve_ldp_rate,
                    solve_legendre)
from .rng import RngStream
from .sampling import (DistributionModel, ModelKind, PairBatch, PairSample, SurfaceMethod,
                       read_samples, sample_ball, sample_cone, sample_pairs, sample_pgg,
                       sample_surface, surface_envelope, surface_weight, write_samples)
from .statistics import (HolderRatioTransformer, RatioDecomposition, decompose, holder_ratio,
                         holder_ratio_rows, reverse_holder_indicator)

__version__ = "0.1.0"
