"""Kernel Stein discrepancy goodness-of-fit tests on the unit hypersphere."""

from .baselines import kuiper_test, mmd_two_sample_test, rayleigh_test
from .bench import ExperimentPlan, emit_results, ingest_csv, parse_plan, run_experiment
from .errors import DKSDError
from .gof import TestConfig, TestOutcome, select_kappa, test_dksd_u, test_dksd_v
from .kernel import SteinKernel, h_q, stein_gram
from .models import FisherBingham, Uniform, VonMisesFisher, parse_model_spec
from .oracle import dksd_quadrature_oracle
from .rng import make_rng
from .samplers import sample_model

__version__ = "0.1.0"

__all__ = [
    "DKSDError", "ExperimentPlan", "FisherBingham", "SteinKernel", "TestConfig",
    "TestOutcome", "Uniform", "VonMisesFisher", "dksd_quadrature_oracle", "emit_results",
    "h_q", "ingest_csv", "kuiper_test", "make_rng", "mmd_two_sample_test",
    "parse_model_spec", "parse_plan", "rayleigh_test", "run_experiment", "sample_model",
    "select_kappa", "stein_gram", "test_dksd_u", "test_dksd_v",
]
