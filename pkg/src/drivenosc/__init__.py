"""Driven harmonic oscillator toolkit.

Quantum and classical dynamics of a harmonic oscillator perturbed by a
monochromatic traveling wave: one-period evolution operators and their
quasienergy spectra, the nearest-resonance tight-binding reduction,
resonance-cell transport diagnostics, and stroboscopic phase-space sections.

Submodules are imported lazily so that the command line entry point can
configure BLAS threading before numpy is loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "specfun",
    "model",
    "chain",
    "floquet",
    "classical",
    "presets",
    "reports",
    "cli",
    "errors",
)

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
