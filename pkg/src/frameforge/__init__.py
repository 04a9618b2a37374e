"""Executable constructions for weighted-exponential frames in A^p spaces.

Modules:

- ``trigpoly``: sparse trigonometric polynomials and lacunary dilation products.
- ``kernels``: triangle, trapezoid and nonnegative kernels with coefficient bounds.
- ``apspace``: sampled Fourier transforms, A^p(R) norms, Haar systems.
- ``localization``: parameter solving, interval certificates, brute-force checks.
- ``framebuilder``: the staged frame construction and its expansions.
"""

from . import apspace, framebuilder, kernels, localization, trigpoly
from .errors import FrameforgeError

__all__ = ["apspace", "framebuilder", "kernels", "localization", "trigpoly", "FrameforgeError"]
__version__ = "0.1.0"
