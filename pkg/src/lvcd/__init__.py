"""Causal discovery for linear non-Gaussian models with dependent latent
confounders: model simulation, higher-order-cumulant identification, and a
three-stage structure recovery pipeline."""

from .builtin import GraphSkeleton, builtin_models, get_skeleton, random_model_instance
from .config import Config, dump_config_file, load_config_file
from .context import PopulationContext, SampleContext, Series
from .cumulants import CumulantEstimator, joint_cumulant
from .errors import (IdentificationError, InputError, InternalInvariantError,
                     LvcdError)
from .hsic import HsicResult, hsic_test
from .identify import (ConfounderCount, LatentCumulantSolution, cumulant_matrix,
                       confounders_and_direction, latent_cumulants, numeric_rank,
                       single_confounder_test, sixth_order_criterion,
                       total_effect_roots)
from .model import (DisturbanceSpec, ModelSpec, SampleMatrix, TotalEffects,
                    default_disturbance, mixing_matrix, population_cumulant,
                    simulate, total_effects, validate)
from .pipeline import (DiscoveryResult, Metrics, discover, discover_population,
                       evaluate, export_json)
from .benchmark import BenchmarkReport, run_benchmark

__all__ = [
    "BenchmarkReport", "Config", "ConfounderCount", "CumulantEstimator",
    "DiscoveryResult", "DisturbanceSpec", "GraphSkeleton", "HsicResult",
    "IdentificationError", "InputError", "InternalInvariantError",
    "LatentCumulantSolution", "LvcdError", "Metrics", "ModelSpec",
    "PopulationContext", "SampleContext", "SampleMatrix", "Series",
    "TotalEffects", "builtin_models", "confounders_and_direction",
    "cumulant_matrix", "default_disturbance", "discover",
    "discover_population", "dump_config_file", "evaluate", "export_json",
    "get_skeleton", "hsic_test", "joint_cumulant", "latent_cumulants",
    "load_config_file", "mixing_matrix", "numeric_rank",
    "population_cumulant", "random_model_instance", "run_benchmark",
    "simulate", "single_confounder_test", "sixth_order_criterion",
    "total_effect_roots", "total_effects", "validate",
]
