"""Quasiparticle scattering dynamics of weakly dissipative transverse field Ising chains."""

__version__ = "0.1.0"
