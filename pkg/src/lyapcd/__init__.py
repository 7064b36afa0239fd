"""Lyapunov-controlled counterdiabatic quantum optimization on a statevector simulator."""

__version__ = "0.1.0"
