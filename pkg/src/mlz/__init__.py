"""mlz: simulation and numerical verification of Mittag-Leffler random
flights, Lorentz gases with heavy-tailed free flights, and the associated
anomalous diffusion and fractional kinetic equations."""

__version__ = "0.1.0"
