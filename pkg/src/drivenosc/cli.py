"""Experiment driver.

Parses a JSON experiment config (or a named preset), dispatches to the
owning module, and writes every output as CSV plus an optional rendered
figure, closing with a manifest that lists all files and the convergence
diagnostics.  Exit codes: 0 success, 2 config error, 3 numerical hard
error, 4 convergence-gate failure.
"""

from __future__ import annotations

import os


def _apply_thread_env():
    """Honor DRIVENOSC_THREADS before numpy binds its thread pools."""
    n = os.environ.get("DRIVENOSC_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


_apply_thread_env()

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chain import DELOCALIZED, build_chain, classify_states, solve_chain
from .classical import classical_cell_map, section_seed_grid, stroboscopic_section
from .csvio import write_csv
from .errors import ConfigError, GateError, NumericalError
from .floquet import (
    basis_state,
    build_floquet_operator,
    lattice2d_eigenproblem,
    propagate,
    quasienergy_spectrum,
    time_averaged_distribution,
)
from .model import ModelParams, build_coupling_table, cell_boundaries, matrix_element_exact
from .presets import list_presets, preset_config
from . import reports

EXPERIMENTS = (
    "chain-spectrum",
    "floquet-spectrum",
    "lattice2d",
    "evolve",
    "time-average",
    "classical-section",
    "cells",
)

# settings schema per experiment: name -> (type, default); REQUIRED means no default
_REQUIRED = object()
_SCHEMAS: dict[str, dict] = {
    "cells": {"m_ceiling": (float, 1500.0)},
    "chain-spectrum": {
        "m_offset": (int, 0),
        "sites_to_m": (int, _REQUIRED),
        "analysis_m": (float, _REQUIRED),
        "export_vectors": (str, "none"),
        "vector_cells": (list, [1, 2, 3, 4]),
        "vector_window": (float, 400.0),
        "export_coupling": (bool, False),
    },
    "floquet-spectrum": {
        "basis_size": (int, _REQUIRED),
        "tolerance": (float, 1e-10),
        "export_vector": (str, "none"),
    },
    "lattice2d": {
        "basis_size": (int, _REQUIRED),
        "l_max": (int, _REQUIRED),
        "size_cap": (int, 6000),
    },
    "evolve": {
        "m0": (int, _REQUIRED),
        "basis_size": (int, _REQUIRED),
        "tau_to": (float, _REQUIRED),
        "snapshots": (int, 6),
        "tolerance": (float, 1e-10),
    },
    "time-average": {
        "m0": (int, _REQUIRED),
        "basis_size": (int, _REQUIRED),
        "tau_start": (float, _REQUIRED),
        "tau_end": (float, _REQUIRED),
        "samples": (int, 100),
        "tolerance": (float, 1e-10),
        "tail_gate": (float, 1e-2),
    },
    "classical-section": {
        "cells": (int, 7),
        "kr_per_cell": (int, 20),
        "angles": (int, 8),
        "periods": (int, 500),
        "tolerance": (float, 1e-11),
        "escape_cells": (int, 0),
    },
}

_PARAM_KEYS = ("h", "epsilon", "resonance_number", "detuning")


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    experiment: str
    params: ModelParams
    settings: dict
    output_dir: Path

    @classmethod
    def from_dict(cls, raw: dict, output_dir: Path | str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - {"experiment", "params", "settings", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
        experiment = raw.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {experiment!r}"
            )
        pdict = raw.get("params")
        if not isinstance(pdict, dict):
            raise ConfigError("config needs a 'params' object")
        bad = set(pdict) - set(_PARAM_KEYS)
        if bad:
            raise ConfigError(f"unknown parameter keys: {sorted(bad)}")
        missing = {"h", "epsilon", "resonance_number"} - set(pdict)
        if missing:
            raise ConfigError(f"missing parameter keys: {sorted(missing)}")
        try:
            params = ModelParams(
                h=float(pdict["h"]),
                epsilon=float(pdict["epsilon"]),
                resonance_number=int(pdict["resonance_number"]),
                detuning=float(pdict.get("detuning", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid physical parameters: {exc}") from exc
        schema = _SCHEMAS[experiment]
        given = raw.get("settings", {})
        if not isinstance(given, dict):
            raise ConfigError("'settings' must be an object")
        bad = set(given) - set(schema)
        if bad:
            raise ConfigError(
                f"unknown settings for {experiment}: {sorted(bad)}; "
                f"allowed: {sorted(schema)}"
            )
        settings = {}
        for key, (typ, default) in schema.items():
            if key in given:
                try:
                    settings[key] = typ(given[key]) if typ is not list else list(given[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"setting {key!r} must be {typ.__name__}") from exc
            elif default is _REQUIRED:
                raise ConfigError(f"experiment {experiment} requires setting {key!r}")
            else:
                settings[key] = default
        out = Path(output_dir) if output_dir is not None else Path(raw.get("output_dir", "out"))
        return cls(experiment=experiment, params=params, settings=settings, output_dir=out)

    def echo(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": {
                "h": self.params.h,
                "epsilon": self.params.epsilon,
                "resonance_number": self.params.resonance_number,
                "detuning": self.params.detuning,
            },
            "settings": {
                k: (v if not isinstance(v, Path) else str(v))
                for k, v in self.settings.items()
            },
            "output_dir": str(self.output_dir),
        }


@dataclass
class RunManifest:
    """Completion record: config echo, diagnostics, and the output files."""

    config: dict
    version: str
    wall_time_s: float
    diagnostics: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "diagnostics": self.diagnostics,
            "outputs": self.outputs,
        }


class _Collector:
    """Accumulates output records and renders figures on request."""

    def __init__(self, outdir: Path, plot: bool):
        self.outdir = outdir
        self.plot = plot
        self.outputs: list[dict] = []

    def csv(self, name: str, header, rows) -> Path:
        path = self.outdir / name
        count = write_csv(path, header, rows)
        self.outputs.append({"file": name, "rows": count})
        return path

    def figure(self, name: str, renderer, *args, **kwargs):
        if not self.plot:
            return None
        path = self.outdir / name
        renderer(path, *args, **kwargs)
        self.outputs.append({"file": name, "kind": "figure"})
        return path


def _partition_for(params: ModelParams, m_top: float):
    return cell_boundaries(params.h, params.resonance_number, m_top)


def _run_cells(cfg: ExperimentConfig, col: _Collector) -> dict:
    part = _partition_for(cfg.params, cfg.settings["m_ceiling"])
    col.csv(
        "cells.csv",
        ["cell", "m_boundary", "m_boundary_rounded", "kr_boundary"],
        (
            (i + 1, part.boundaries_real[i], int(part.quantum_boundaries[i]),
             part.classical_boundaries[i])
            for i in range(part.count)
        ),
    )
    col.figure("cells.png", reports.render_cells, part, "resonance cell boundaries")
    return {"cell_count": part.count}


def _run_chain_spectrum(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    N = p.resonance_number
    site_count = int((s["sites_to_m"] - s["m_offset"]) // N) + 1
    chain = build_chain(p, s["m_offset"], site_count)
    states = solve_chain(chain)
    part = _partition_for(p, s["sites_to_m"] + 3 * math.pi * math.sqrt(2 * s["sites_to_m"] / p.h))
    states = classify_states(states, part)
    window = [st for st in states if st.mean <= s["analysis_m"]]
    col.csv(
        "chain_states.csv",
        ["q", "quasienergy", "mean_m", "variance", "cell"],
        ((q, st.quasienergy, st.mean, st.variance, st.cell_index)
         for q, st in enumerate(window)),
    )
    boundaries = [b for b in part.boundaries_real if b <= s["analysis_m"]]
    col.figure(
        "chain_states.png", reports.render_spectrum_stats, window, boundaries,
        f"chain spectrum, eps={p.epsilon:g}, delta={p.detuning:g}",
    )
    diag = {
        "sites": chain.size,
        "states_in_window": len(window),
        "delocalized_in_window": sum(1 for st in window if st.cell_index == DELOCALIZED),
    }
    if s["export_vectors"] == "cell-centers":
        for i in s["vector_cells"]:
            lo, hi = part.cell_interval(i)
            resident = [st for st in states if st.cell_index == i]
            if not resident:
                continue
            center = 0.5 * (lo + hi)
            pick = min(resident, key=lambda st: abs(st.mean - center))
            col.csv(
                f"vector_cell{i}.csv",
                ["m", "probability"],
                zip(pick.levels, np.abs(pick.amplitudes) ** 2),
            )
            col.figure(
                f"vector_cell{i}.png", reports.render_vector_profile,
                pick.levels, np.abs(pick.amplitudes) ** 2, (lo, hi),
                f"cell-{i} eigenfunction, mean={pick.mean:.1f}",
            )
    elif s["export_vectors"] == "delocalized":
        cand = [st for st in states
                if st.mean <= s["vector_window"] and st.cell_index == DELOCALIZED]
        if not cand:
            cand = [st for st in states if st.mean <= s["vector_window"]]
        pick = max(cand, key=lambda st: st.variance)
        col.csv(
            "vector_delocalized.csv",
            ["m", "probability"],
            zip(pick.levels, np.abs(pick.amplitudes) ** 2),
        )
        col.figure(
            "vector_delocalized.png", reports.render_vector_profile,
            pick.levels, np.abs(pick.amplitudes) ** 2, boundaries,
            f"delocalized eigenfunction, variance={pick.variance:.1f}",
        )
        diag["delocalized_pick_variance"] = pick.variance
        diag["delocalized_pick_index"] = next(
            q for q, st in enumerate(states) if st is pick
        )
    if s["export_coupling"]:
        ms = np.arange(0, int(s["analysis_m"]) + 1)
        vals = [matrix_element_exact(int(m), int(m) + N, p.h) for m in ms]
        col.csv(
            "coupling_elements.csv",
            ["m", "mp", "re_f", "im_f"],
            ((int(m), int(m) + N, v.real, v.imag) for m, v in zip(ms, vals)),
        )
        gauge = (1j ** N).conjugate() * (-1.0 if N % 2 else 1.0)
        col.figure(
            "coupling_elements.png", reports.render_coupling,
            ms, [(gauge * v).real for v in vals], boundaries,
            "resonance-offset coupling element",
        )
    return diag


def _run_floquet_spectrum(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    op = build_floquet_operator(p, s["basis_size"], s["tolerance"])
    states = quasienergy_spectrum(op)
    col.csv(
        "floquet_states.csv",
        ["q", "sigma", "mean_m", "variance"],
        ((q, st.quasienergy, st.mean, st.variance) for q, st in enumerate(states)),
    )
    part = _partition_for(p, s["basis_size"])
    col.figure(
        "floquet_states.png", reports.render_quasienergy_scatter,
        states, part.boundaries_real, p.h * p.mu,
        f"quasienergy spectrum, eps={p.epsilon:g}",
    )
    diag = {
        "unitarity_residual": op.unitarity_residual,
        "integrator_nfev": op.nfev,
        "basis_size": op.basis_size,
    }
    if s["export_vector"] == "chaotic":
        b2 = part.boundaries_real[1] if part.count >= 2 else part.boundaries_real[-1]
        cand = [st for st in states if st.mean < b2]
        pick = max(cand, key=lambda st: st.variance)
        col.csv(
            "vector_chaotic.csv",
            ["m", "probability"],
            zip(pick.levels, np.abs(pick.amplitudes) ** 2),
        )
        col.figure(
            "vector_chaotic.png", reports.render_vector_profile,
            pick.levels, np.abs(pick.amplitudes) ** 2, part.boundaries_real[:4],
            f"chaotic-region eigenfunction, variance={pick.variance:.1f}",
        )
        diag["chaotic_pick_variance"] = pick.variance
    return diag


def _run_lattice2d(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    res = lattice2d_eigenproblem(p, s["basis_size"], s["l_max"], size_cap=s["size_cap"])
    levels = np.arange(s["basis_size"])
    h_mu = p.h * p.mu

    def rows():
        for q in range(len(res.eigenvalues)):
            marg = res.level_marginal(q)
            mean = float(marg @ levels)
            var = math.sqrt(max(float(marg @ (levels - mean) ** 2), 0.0))
            yield (q, res.eigenvalues[q], (res.eigenvalues[q] + p.h / 2) % h_mu,
                   mean, var, res.edge_weight(q))

    col.csv(
        "lattice_states.csv",
        ["q", "energy", "sigma_mod", "mean_m", "variance", "edge_weight"],
        rows(),
    )
    col.figure(
        "lattice_states.png", reports.render_lattice, res,
        f"lattice quasienergies, basis {s['basis_size']}, harmonics +/-{s['l_max']}",
    )
    return {
        "size": res.problem.size,
        "interior_states": int(len(res.interior_indices())),
    }


def _run_evolve(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    table = build_coupling_table(p, s["basis_size"])
    times = np.linspace(0.0, s["tau_to"], s["snapshots"] + 1)
    state = basis_state(s["basis_size"], s["m0"])
    profiles = [np.abs(state.amplitudes) ** 2]
    drift = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        state = propagate(state, float(t0), float(t1), p, table, s["tolerance"])
        profiles.append(np.abs(state.amplitudes) ** 2)
        drift = max(drift, state.stats.norm_drift)
    col.csv(
        "evolution.csv",
        ["tau", "m", "probability"],
        ((float(t), int(m), float(prof[m]))
         for t, prof in zip(times, profiles)
         for m in range(s["basis_size"])),
    )
    part = _partition_for(p, s["basis_size"])
    col.figure(
        "evolution.png", reports.render_evolution,
        times, np.array(profiles), part.boundaries_real,
        f"occupation snapshots from level {s['m0']}",
    )
    return {
        "norm_drift_max": drift,
        "tail_mass_final": float(profiles[-1][int(0.9 * s['basis_size']):].sum()),
    }


def _run_time_average(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    op = build_floquet_operator(p, s["basis_size"], s["tolerance"])
    dist = time_averaged_distribution(
        p, s["m0"], s["tau_start"], s["tau_end"], s["samples"], op=op,
        tolerance=s["tolerance"],
    )
    if dist.tail_max > s["tail_gate"]:
        raise GateError(
            f"time-average tail mass {dist.tail_max:.3e} exceeds gate "
            f"{s['tail_gate']:.1e}; basis too small"
        )
    col.csv(
        "distribution.csv",
        ["m", "probability"],
        ((int(m), float(v)) for m, v in enumerate(dist.probabilities)),
    )
    part = _partition_for(p, s["basis_size"])
    col.figure(
        "distribution.png", reports.render_distribution,
        dist.probabilities, part.boundaries_real, s["m0"],
        f"time-averaged occupation, eps={p.epsilon:g}, "
        f"window {s['tau_start']:g}..{s['tau_end']:g}",
    )
    return {
        "unitarity_residual": op.unitarity_residual,
        "integrator_nfev": op.nfev,
        "tail_mass_max": dist.tail_max,
        "tail_breach_time": dist.tail_breach_time,
    }


def _run_classical_section(cfg: ExperimentConfig, col: _Collector) -> dict:
    p, s = cfg.params, cfg.settings
    seeds = section_seed_grid(p, s["cells"], s["kr_per_cell"], s["angles"])
    section = stroboscopic_section(seeds, s["periods"], p, s["tolerance"])
    col.csv(
        "section.csv",
        ["trajectory_id", "s", "kr", "theta"],
        section.rows(),
    )
    kr_top = p.resonance_number + (s["cells"] + 2) * math.pi
    part = _partition_for(p, kr_top**2 / (2 * p.h))
    col.figure(
        "section.png", reports.render_section,
        section, part.classical_boundaries[: s["cells"]],
        f"stroboscopic section, eps={p.epsilon:g}, delta={p.detuning:g}",
    )
    diag = {"trajectories": section.trajectory_count, "periods": section.period_count}
    if s["escape_cells"] > 0:
        kr_need = part.classical_boundaries[s["escape_cells"] - 1] + 0.5
        cmap = classical_cell_map(p, float(kr_need), periods=s["periods"],
                                  tolerance=s["tolerance"])
        col.csv(
            "cell_map.csv",
            ["cell", "kr_boundary", "leave_fraction"],
            cmap.rows(),
        )
        diag["leave_fraction"] = [float(x) for x in cmap.leave_fraction]
    return diag


_RUNNERS = {
    "cells": _run_cells,
    "chain-spectrum": _run_chain_spectrum,
    "floquet-spectrum": _run_floquet_spectrum,
    "lattice2d": _run_lattice2d,
    "evolve": _run_evolve,
    "time-average": _run_time_average,
    "classical-section": _run_classical_section,
}


def run(cfg: ExperimentConfig, plot: bool = True) -> RunManifest:
    """Execute one experiment and write outputs plus the manifest."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    col = _Collector(cfg.output_dir, plot)
    t0 = time.perf_counter()
    diagnostics = _RUNNERS[cfg.experiment](cfg, col)
    manifest = RunManifest(
        config=cfg.echo(),
        version=__version__,
        wall_time_s=time.perf_counter() - t0,
        diagnostics=diagnostics,
        outputs=col.outputs + [{"file": "manifest.json"}],
    )
    with open(cfg.output_dir / "manifest.json", "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")
    return manifest


def _apply_overrides(raw: dict, pairs: list[str]) -> dict:
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through non-object key {part!r}")
        node[parts[-1]] = parsed
    return raw


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivenosc",
        description="driven-oscillator quasienergy and transport experiments",
    )
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the config file")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p_run.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config entry (dotted path, JSON value)",
    )
    p_pre = sub.add_parser("preset", help="run a named preset")
    p_pre.add_argument("name", help="preset name (see list-presets)")
    p_pre.add_argument("--out", default=None, help="output directory")
    p_pre.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p_pre.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("list-presets", help="print the preset catalog")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "list-presets":
            for name, entry in sorted(list_presets().items()):
                print(f"{name:8s} {entry['experiment']:18s} {entry['description']}")
            return 0
        if args.command == "run":
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        else:  # preset
            try:
                raw = preset_config(args.name)
            except KeyError as exc:
                raise ConfigError(str(exc)) from exc
            raw.setdefault("output_dir", f"out-{args.name}")
        raw = _apply_overrides(raw, args.set)
        cfg = ExperimentConfig.from_dict(raw, output_dir=args.out)
        manifest = run(cfg, plot=not args.no_plot)
        print(
            f"wrote {len(manifest.outputs)} files to {cfg.output_dir} "
            f"in {manifest.wall_time_s:.1f} s"
        )
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except GateError as exc:
        print(f"convergence gate failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
