"""dinnlab: disease-informed neural networks for epidemic parameter estimation.

A numpy library that learns unknown parameters of compartmental epidemic ODE
models from (possibly noisy, possibly partial) time series by training a
small MLP constrained by the ODE residuals, with classical least-squares
baselines and closed-form SIR machinery for independent checks.
"""

__version__ = "0.1.0"

from .models import CompartmentModel, ParamSpec, registry_get, registry_names
from .integrate import IntegratorConfig, Trajectory
from .integrate import integrate as integrate_model
from .dataset import Dataset, NoiseSpec, ingest_real_csv, mask_compartments, synthesize
from .dinn import DinnModel, FitReport, TrainConfig, train

__all__ = [
    "CompartmentModel",
    "ParamSpec",
    "registry_get",
    "registry_names",
    "IntegratorConfig",
    "Trajectory",
    "integrate_model",
    "Dataset",
    "NoiseSpec",
    "synthesize",
    "mask_compartments",
    "ingest_real_csv",
    "DinnModel",
    "FitReport",
    "TrainConfig",
    "train",
    "__version__",
]
