"""
MMGPL: multimodal graph prompt learning on volumetric scans.

Usage:
    from mmgpl import MMGPLModel, load_run_config, load_dataset

    cfg = load_run_config("config/run_config.json")
    dataset = load_dataset("data/synth/manifest.json")
"""

from .config import RunConfig, TrainConfig, dump_run_config, load_run_config
from .dataset import Dataset, DatasetManifest, Subject, load_dataset
from .model import ForwardResult, MMGPLModel, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "TrainConfig", "dump_run_config", "load_run_config",
    "Dataset", "DatasetManifest", "Subject", "load_dataset",
    "ForwardResult", "MMGPLModel", "load_model", "save_model",
]
