"""Device-independent randomness amplification laboratory.

Submodules: ``boxes`` (no-signaling boxes), ``sources`` (SV bit sources),
``bell`` (the Bell functional), ``lp`` and ``simplex`` (output-probability
certificates), ``bounds`` (concentration and parameter calculus),
``extractors`` (GF(2^n) extractors), ``protocol`` (Protocols I and II) and
``cli``.
"""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
