"""Spectral real/fake image detection with bilateral high-pass filters.

Submodules: numerics (DFT and raster helpers), filters (the two high-pass
filters and the feature pipeline), acm (artifact compression map), netlite
(numpy classifier), synthlab (synthetic data), evalkit (metrics and
harness), io (file formats and config), cli (command line).
"""

from .filters import BihpfConfig, FreqHpfSpec, LogFilterSpec, bihpf_pipeline, scaled_config

__all__ = ["BihpfConfig", "FreqHpfSpec", "LogFilterSpec", "bihpf_pipeline", "scaled_config"]
__version__ = "0.1.0"
