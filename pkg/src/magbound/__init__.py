"""Variational certificates for magnetic bound states near almost-flat
corners and weakly curved edges.

Subpackages solve the half-line fiber problem (degennes), assemble corner
and curved-edge trial states (corner, curved), study the weak-coupling
effective operator (weakcoupling), and cross-check everything against a
direct 2D discretization (mesh2d, solve2d).
"""

from __future__ import annotations

__version__ = "0.1.0"
