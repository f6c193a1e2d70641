"""Radial quantum LDPC codes: construction, analysis, circuit-level simulation
and windowed BP+OSD decoding."""

import os

# The BP kernel keeps independent shots in separate scalar lanes and relies on
# LLVM's SLP vectoriser, which numba leaves off unless asked.
os.environ.setdefault("NUMBA_SLP_VECTORIZE", "1")

__version__ = "0.1.0"
