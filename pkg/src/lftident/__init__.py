"""Frequency-domain identifiability and sloppiness analysis of LFT-structured descriptor systems."""

from . import errors, freqplan, identifiability, model, numkit, oracle, response, sloppiness

__version__ = "0.1.0"

__all__ = [
    "errors",
    "freqplan",
    "identifiability",
    "model",
    "numkit",
    "oracle",
    "response",
    "sloppiness",
    "__version__",
]
