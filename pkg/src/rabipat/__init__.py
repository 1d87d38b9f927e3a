"""Anisotropic quantum Rabi model: exact diagonalization, operator-space
pattern decomposition and the parametrically driven Jaynes-Cummings simulator.
"""

__version__ = "0.1.0"
