"""
bloch-hhg - Core Package

High-harmonic currents of a 1D model crystal, computed in velocity gauge
and transformed exactly to length gauge at gauge-commensurate times.
"""

from .config import RunConfig, parse_config, serialize_config
from .errors import BlochHHGError
from .pipeline import HHGPipeline, RunSummary, run_pipeline

__version__ = "0.1.0"
__all__ = [
    "RunConfig",
    "parse_config",
    "serialize_config",
    "BlochHHGError",
    "HHGPipeline",
    "RunSummary",
    "run_pipeline",
]
