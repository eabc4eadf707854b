"""Bouncing-ball spectral toolkit for centrally symmetric analytic billiards.

Boundary geometry and jets, periodic orbits and length spectra, bouncing
ball stability, closed-form Hessian data of the iterates, wave-invariant
combinations and the recovery of the boundary jet from them.
"""

__version__ = "0.1.0"
