"""Active exterior cloaking for the 2D Helmholtz equation at complex
wavenumbers, with a transient thermal pipeline on top.

Submodules:

* specfun: complex-argument Bessel/Hankel functions and the
  truncation-bound constants they satisfy.
* kernels: vectorized evaluation kernels (compiled extension with a
  pure numpy fallback).
* graf: Green function translation by the addition theorem and its
  truncation error.
* cloak: active cloak synthesis, multipole devices, error bounds.
* scatter: sound-soft scattering from a boundary integral equation.
* heat: Fourier-Laplace synthesis of transient fields from Helmholtz
  solves at complex wavenumbers.
* cli: command line entry points.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
