"""Energy-based discontinuous Galerkin solver for semilinear wave equations
u_tt + theta u_t = c^2 Lap(u) + f(u) on intervals and Cartesian rectangles.
"""

__version__ = "0.1.0"
