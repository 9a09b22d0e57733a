"""Thin-domain homogenization toolkit.

Solves the rescaled semilinear Neumann problem on oscillating thin domains with
reactions concentrated in a strip along the oscillating boundary, computes the
homogenized coefficient from the periodic cell problem, solves the 1D limit
problem and measures the convergence of equilibria as the thickness goes to 0.
"""

__version__ = "0.1.0"
