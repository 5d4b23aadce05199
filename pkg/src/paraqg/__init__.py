"""paraqg: paracontrolled calculus for the stochastic dissipative
quasi-geostrophic equation on the 2-torus."""

__version__ = "0.1.0"
