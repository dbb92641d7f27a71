"""Disordered pinning of power-law renewals in heavy-tailed environments.

A numerics library for the pinning model whose renewal gaps decay like
``n**-(1+alpha)`` and whose IID site disorder lies in the domain of
attraction of a stable law with index in (1, 2): exact partition-function
dynamic programming, heavy-tail-aware Monte Carlo estimators, and
finite-volume certificates for localization and delocalization.
"""

__version__ = "0.1.0"

from .renewal import (RenewalKernel, RenewalMassTable, IntersectionKernel,
                      make_kernel, mass_table, intersection_kernel, overlap_sum,
                      sample_path, sample_bridge, homogeneous_g,
                      homogeneous_free_energy, ideal_free_energy)
from .disorder import (DisorderSpec, EnvironmentSample, TruncationContext,
                       make_spec, sample_env, tilt_sample, cap_environment,
                       truncation_context, moment_1plusq, moment_budget_beta,
                       penalty_functionals)
from .partition_dp import (PolymerParams, PartitionResult, partition,
                        enumerate_partition, exp_form_equivalence,
                        set_restricted_partition, truncated_gap_partition,
                        penalized_annealed_partition)
from .estimators import (MomentEstimate, FreeEnergyEstimate, RhoCertificate,
                         ExponentFit, median_of_means, quenched_free_energy,
                         free_energy_excess, fractional_moment,
                         exact_second_moment_truncated, copachi_check,
                         spine_sample, rho_certificate, irrelevance_certificate,
                         fracmoment_profile, critical_point, fit_exponent,
                         paley_zygmund_check, h2_reference, k_for_reward)
from .experiments import (ExperimentConfig, CampaignResult, run_campaign,
                          preset_config, load_config, verify)
