"""Network-delay estimation with a GRNN whose smoothing is tuned by a real-coded GA."""
from ._backend import BACKEND
from .dataset import (Dataset, DatasetError, DelaySample, NetworkCondition, NormStats,
                      load_csv, normalize, save_csv, split)
from .ga import GaConfig, GaResult, run
from .grnn import (SIGMA_MAX, SIGMA_MIN, GrnnModel, Sigma, distance_sq, estimate,
                   estimate_batch, fit, load_model, loo_estimates, save_model)
from .metrics import EvalReport, evaluate, fitness, mape
from .tracegen import GenConfig, generate, mean_delay

__version__ = "0.1.0"
