"""Quantum Mpemba effect in charge-conserving chaotic spin chains.

Statevector simulation of a U(1) Floquet circuit and the mixed-field Ising
chain, subsystem relaxation witnesses, a fluctuating-hydrodynamics model of
the late-time tails, and curve analysis.
"""

__version__ = "0.1.0"

from ._backend import BACKEND

__all__ = ["BACKEND", "__version__"]
