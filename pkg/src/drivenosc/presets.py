"""Named experiment presets.

Each preset bundles the drive parameters and experiment settings for one of
the standard studies: coupling-element structure, chain spectra at and off
exact resonance, classical sections in the regular and chaotic regimes, and
the long-window quantum transport runs.  Preset names follow the customary
figure numbering of this model family (fig2 .. fig8b).
"""

from __future__ import annotations

import copy

__all__ = ["PRESETS", "list_presets", "preset_config"]

_CHAIN_PARAMS = {"h": 0.2, "epsilon": 0.02, "resonance_number": 2, "detuning": 0.0}
_STRONG_PARAMS = {"h": 0.2, "epsilon": 3.0, "resonance_number": 2, "detuning": 0.0}

# Quantum basis cutoff for the strong-drive and transport presets: one and a
# half times the third cell boundary (m_3 = 337.55 at h = 0.2, N = 2), per
# the basis-truncation rule in floquet.recommended_basis_size.
_BASIS = 507

PRESETS: dict[str, dict] = {
    "fig2": {
        "description": "coupling elements along the resonance offset and "
        "cell-centered chain eigenfunctions at weak drive",
        "experiment": "chain-spectrum",
        "params": _CHAIN_PARAMS,
        "settings": {
            "sites_to_m": 1000,
            "analysis_m": 600.0,
            "export_vectors": "cell-centers",
            "vector_cells": [1, 2, 3, 4],
            "export_coupling": True,
        },
    },
    "fig3": {
        "description": "characteristic delocalized chain eigenfunction "
        "(variance beyond its cell width) at weak drive",
        "experiment": "chain-spectrum",
        "params": _CHAIN_PARAMS,
        "settings": {
            "sites_to_m": 1000,
            "analysis_m": 400.0,
            "export_vectors": "delocalized",
        },
    },
    "fig4a": {
        "description": "chain spectrum statistics (mean vs variance) at "
        "exact resonance",
        "experiment": "chain-spectrum",
        "params": _CHAIN_PARAMS,
        "settings": {"sites_to_m": 1200, "analysis_m": 800.0},
    },
    "fig4b": {
        "description": "chain spectrum statistics with detuning 0.001 "
        "(finite resonant region)",
        "experiment": "chain-spectrum",
        "params": {**_CHAIN_PARAMS, "detuning": 0.001},
        "settings": {"sites_to_m": 1200, "analysis_m": 800.0},
    },
    "fig5a": {
        "description": "classical stroboscopic section, weak drive, exact "
        "resonance (island chains in every cell)",
        "experiment": "classical-section",
        "params": _CHAIN_PARAMS,
        "settings": {"cells": 7, "kr_per_cell": 20, "angles": 8, "periods": 500},
    },
    "fig5b": {
        "description": "classical stroboscopic section, weak drive, "
        "detuning 0.001 (only the first cells survive)",
        "experiment": "classical-section",
        "params": {**_CHAIN_PARAMS, "detuning": 0.001},
        "settings": {"cells": 7, "kr_per_cell": 20, "angles": 8, "periods": 500},
    },
    "fig6": {
        "description": "classical stroboscopic section at strong drive "
        "(chaotic sea over the first two cells)",
        "experiment": "classical-section",
        "params": _STRONG_PARAMS,
        "settings": {"cells": 7, "kr_per_cell": 20, "angles": 8, "periods": 500},
    },
    "fig7a": {
        "description": "time-averaged occupation from level 30, weak drive "
        "(tunneling tails past the first cell)",
        "experiment": "time-average",
        "params": _CHAIN_PARAMS,
        "settings": {
            "m0": 30,
            "basis_size": _BASIS,
            "tau_start": 5000.0,
            "tau_end": 105000.0,
            "samples": 100,
        },
    },
    "fig7b": {
        "description": "time-averaged occupation from level 30, strong "
        "drive (spread across the chaotic cells)",
        "experiment": "time-average",
        "params": _STRONG_PARAMS,
        "settings": {
            "m0": 30,
            "basis_size": _BASIS,
            "tau_start": 500.0,
            "tau_end": 10500.0,
            "samples": 100,
        },
    },
    "fig8a": {
        "description": "quasienergy spectrum statistics of the one-period "
        "operator at strong drive",
        "experiment": "floquet-spectrum",
        "params": _STRONG_PARAMS,
        "settings": {"basis_size": _BASIS},
    },
    "fig8b": {
        "description": "characteristic chaotic-region quasienergy "
        "eigenfunction at strong drive",
        "experiment": "floquet-spectrum",
        "params": _STRONG_PARAMS,
        "settings": {"basis_size": _BASIS, "export_vector": "chaotic"},
    },
}


def list_presets() -> dict[str, dict]:
    """Catalog of named presets (deep copy; safe to mutate)."""
    return copy.deepcopy(PRESETS)


def preset_config(name: str) -> dict:
    """Config dict for one preset, ready for the experiment runner."""
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}")
    cfg = copy.deepcopy(PRESETS[name])
    cfg.pop("description")
    return cfg
