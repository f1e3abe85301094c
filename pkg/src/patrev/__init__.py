"""Time-reversal reconstruction of photoacoustic sources in attenuating media.

The package is organized around five building blocks:

* :mod:`patrev.dispersion` -- complex dispersion relations for the supported
  attenuation laws, the corrected wavenumbers and amplitude weights used in
  time reversal, and the asymptotic expansion coefficients behind them.
* :mod:`patrev.spectral` -- frequency-domain signal operators: the Fourier
  transform at real and complex wavenumbers, band limiting, the attenuation
  map and its correction operators.
* :mod:`patrev.forward` -- synthetic data: parametric phantoms, sensor
  arrays on a sphere, and attenuated boundary traces.
* :mod:`patrev.reversal` -- corrected Green's functions, back propagation,
  and the regularized imaging functional.
* :mod:`patrev.cli` -- batch front end (simulate / reconstruct / sweep /
  thresholds / verify-identity) writing CSV reports and figures.
"""

__version__ = "0.1.0"

from patrev.models import KSB, NSW, AttenuationModel, ThermoViscous

__all__ = ["KSB", "NSW", "AttenuationModel", "ThermoViscous", "__version__"]
