"""capwave: a pseudo-spectral laboratory for capillary surface waves.

Subpackages cover the periodic-box Fourier infrastructure (``spectral``), the
Dirichlet-Neumann operator with its multilinear series and elliptic reference
solver (``dno``), time integration of the full surface system (``evolution``),
the quadratic interaction symbols and their resonance geometry (``resonance``),
bilinear Fourier multipliers with dyadic bound probes (``pseudo_product``),
the free capillary group on the plane via circular harmonics and oscillatory
quadrature (``dispersive``), and a command-line front end (``cli``).
"""

__version__ = "0.1.0"

from . import dispersive, dno, evolution, pseudo_product, resonance, spectral  # noqa: F401
