"""Nonstationary Gaussian-process modeling via spectral mixtures of
stationary components: simulation, MCMC fitting, and mixture kriging."""

__version__ = "0.1.0"
