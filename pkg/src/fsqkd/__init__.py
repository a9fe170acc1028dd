"""Free-space QKD rate simulator.

Models diffraction-limited optical links between finite transmitter and
receiver apertures and computes secret-key rates for decoy-state BB84
alongside fundamental capacity bounds.  Subsystems:

- ``mathkern``: special functions and adaptive quadrature with controlled
  error.
- ``modes``: aperture geometry, soft-pupil eigenmode transmissivities and
  Laguerre-Gauss mode propagation through hard circular apertures.
- ``ogba``: overlapping Gaussian beam arrays through hard square apertures
  onto pixelated detectors.
- ``qkd``: decoy-state BB84 rate chain, capacities, and mode-separator
  cross-talk bookkeeping.
- ``optimize``: derivative-free optimization of beam and pixel parameters
  and rate-versus-range sweeps.
- ``cli``: command-line interface over config and result files.

Numerical hot loops live in ``fsqkd.kernels``, which selects a compiled
extension when available and a vectorized NumPy fallback otherwise.
"""

__version__ = "0.1.0"

from .kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
