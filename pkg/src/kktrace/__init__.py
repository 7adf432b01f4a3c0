"""Numerical toolkit for trace formulas of charged null geodesics on circle bundles.

Submodules: ``lie`` (root data, weights, characters), ``geometry`` (models and
the reduced Hamiltonian), ``dynamics`` (Wong flow), ``reduction`` (periodic
orbits, holonomy, volumes), ``spectrum`` (wave-operator eigenvalues), ``trace``
(multiplicity series and their fits) and ``cli`` (scenario runner).
"""

from . import dynamics, geometry, lie, reduction, spectrum, trace
from .errors import KKTraceError
from .geometry import Model, PhasePoint, flat_model

__version__ = "0.1.0"

__all__ = ["lie", "geometry", "dynamics", "reduction", "spectrum", "trace",
           "KKTraceError", "Model", "PhasePoint", "flat_model", "__version__"]
