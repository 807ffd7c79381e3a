"""Witness-verified open-vocabulary relation learning on synthetic RGB-D desk scenes."""

__version__ = "0.1.0"

from relwit.families import WitnessFamily

__all__ = ["WitnessFamily", "__version__"]
