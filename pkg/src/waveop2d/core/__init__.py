"""
Numerical kernels: grids, potentials, free operators, M0, S(lambda), dilations, propagators.
"""

from .grid import Field2D, Grid2D, make_grid, make_packet
from .potential import Potential, make_potential
from .free_ops import EnergyGrid, FiberedFunction, make_energy_grid

__all__ = [
    'Field2D',
    'Grid2D',
    'make_grid',
    'make_packet',
    'Potential',
    'make_potential',
    'EnergyGrid',
    'FiberedFunction',
    'make_energy_grid',
]
