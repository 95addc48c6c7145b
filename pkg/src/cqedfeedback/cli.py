"""Scenario runner producing plot-ready data for the feedback-protocol figures.

Usage::

    cqed-feedback fig4 --config cfg.json --out results/ --format csv

Every scenario writes one file per series.  CSV files carry a header row
and a ``<name>.meta.json`` sidecar with the fully resolved configuration;
JSON files nest the columns under the same metadata envelope.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .errors import (
    ConsistencyError,
    DegenerateSpectrumError,
    DomainError,
    ParameterRangeError,
    PoleProximityError,
    QuadratureError,
    SearchError,
)
from .feedback import (
    constant_p_baseline,
    feedback_trace,
    first_round_prob,
    single_trial_prob,
    spectral_after_n,
)
from .model import FactorKind, SpectralFunction, SystemParams, transfer_C, transfer_D
from .modes import MirrorCavity, find_quasimode, mode_amplitudes, peak_positions
from .quadrature import integrate_abs2

log = logging.getLogger(__name__)

SCENARIOS = ("fig2", "fig3", "fig4", "fig5", "sweep", "modes")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULT_LAMBDAS = {"fig4": [2.5, 25.0], "fig5": [0.1, 0.5, 2.5], "sweep": [0.1, 0.5, 1.0, 2.5, 5.0, 25.0]}
FIG3_ROUNDS = (1, 2, 10)


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    """Resolved scenario configuration.

    ``lambda_L_values`` are in units of ``kappa`` and always use the optimal
    ratio ``lambda_R = sqrt(2) lambda_L``; ``kappa_in_grid`` holds ratios
    ``kappa_in / kappa``.
    """

    scenario: str
    params: SystemParams = field(default_factory=lambda: SystemParams.optimal(2.5))
    grid: dict | None = None
    rounds: int = 100
    kappa_in_grid: list | None = None
    lambda_L_values: list | None = None
    tolerance: float = 1e-10
    output: dict = field(default_factory=lambda: {"directory": ".", "format": "csv"})
    cavity: dict | None = None
    sweep: dict | None = None
    workers: int = 1

    def resolve(self) -> "ScenarioConfig":
        """Fill scenario-dependent defaults and validate."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        p = self.params
        if self.grid is None:
            if self.scenario == "modes":
                self.grid = {"k_min": 0.0, "k_max": 2 * math.pi, "samples": 4001}
            else:
                self.grid = {"k_min": p.k_c - 8 * p.kappa, "k_max": p.k_c + 8 * p.kappa, "samples": 2001}
        g = self.grid
        if set(g) != {"k_min", "k_max", "samples"}:
            raise ConfigError("grid needs exactly k_min, k_max, samples")
        g["k_min"], g["k_max"] = float(g["k_min"]), float(g["k_max"])
        if not isinstance(g["samples"], int) or g["samples"] < 2:
            raise ConfigError("grid.samples must be an integer >= 2")
        if not g["k_min"] < g["k_max"]:
            raise ConfigError("grid.k_min must be below grid.k_max")
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ConfigError("rounds must be an integer >= 1")
        if self.scenario == "fig4" and self.rounds < 10:
            raise ConfigError("fig4 needs rounds >= 10")
        if self.kappa_in_grid is None:
            self.kappa_in_grid = [float(x) for x in np.logspace(-3, 2, 51)]
        if not self.kappa_in_grid or any(not (x > 0 and math.isfinite(x)) for x in self.kappa_in_grid):
            raise ConfigError("kappa_in_grid must hold positive ratios")
        if self.lambda_L_values is None:
            self.lambda_L_values = list(DEFAULT_LAMBDAS.get(self.scenario, []))
        if any(not (x >= 0 and math.isfinite(x)) for x in self.lambda_L_values):
            raise ConfigError("lambda_L_values must be non-negative")
        if not (self.tolerance > 0):
            raise ConfigError("tolerance must be positive")
        out = {"directory": ".", "format": "csv", **self.output}
        if set(out) != {"directory", "format"}:
            raise ConfigError("output takes only 'directory' and 'format'")
        if out["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")
        self.output = out
        if self.scenario == "modes":
            cav = {"r": 0.99, "t": None, "l": 1.0, "k_guess": None, "count": 4, **(self.cavity or {})}
            if set(cav) != {"r", "t", "l", "k_guess", "count"}:
                raise ConfigError("cavity takes r, t, l, k_guess, count")
            r = _complex(cav["r"])
            if cav["t"] is None:
                cav["t"] = [0.0, math.sqrt(1 - abs(r) ** 2)]  # lossless-style
            if cav["k_guess"] is None:
                cav["k_guess"] = math.pi / (2 * cav["l"])
            self.cavity = cav
        if self.scenario == "sweep":
            sw = {"field": "lambda_L", "values": self.lambda_L_values, "optimal_ratio": True, **(self.sweep or {})}
            if set(sw) != {"field", "values", "optimal_ratio"}:
                raise ConfigError("sweep takes field, values, optimal_ratio")
            if sw["field"] not in ("kappa", "delta_e", "lambda_L", "lambda_R"):
                raise ConfigError(f"cannot sweep {sw['field']!r}")
            self.sweep = sw
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        return self

    def metadata(self) -> dict:
        d = dataclasses.asdict(self)
        d["params"] = self.params.as_dict()
        d.pop("workers")
        # the destination is not part of the computation; leaving it out keeps
        # files byte-identical wherever they are written
        d["output"] = {"format": self.output["format"]}
        d["package_version"] = __version__
        return d

    @classmethod
    def from_dict(cls, scenario: str, data: dict) -> "ScenarioConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if data.pop("scenario", scenario) != scenario:
            raise ConfigError("config scenario does not match the command line")
        if "params" in data:
            pd = data["params"]
            pkeys = {"kappa", "k_c", "delta_e", "lambda_L", "lambda_R"}
            if not isinstance(pd, dict) or set(pd) - pkeys:
                raise ConfigError(f"params accepts only {sorted(pkeys)}")
            data["params"] = SystemParams(**{**SystemParams.optimal(2.5).as_dict(), **pd})
        return cls(scenario=scenario, **data)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError("complex numbers are given as [re, im]")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


@dataclass
class PlotSeries:
    name: str
    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"series {self.name}: columns have unequal lengths {lengths}")
        self.columns = {k: [float(x) for x in v] for k, v in self.columns.items()}
        for k, v in self.columns.items():
            if not all(math.isfinite(x) for x in v):
                raise ValueError(f"series {self.name}: column {k} holds non-finite values")

    def __len__(self):
        return len(next(iter(self.columns.values()), []))


# --------------------------------------------------------------------------
# Scenarios
# --------------------------------------------------------------------------


def _grid(cfg: ScenarioConfig) -> np.ndarray:
    g = cfg.grid
    return np.linspace(g["k_min"], g["k_max"], g["samples"])


def _pmap(cfg, fn, items):
    if cfg.workers == 1:
        return [fn(x) for x in items]
    # the compiled kernel releases the GIL, so threads run concurrently
    with ThreadPoolExecutor(cfg.workers) as ex:
        return list(ex.map(fn, items))


def run_fig2(cfg: ScenarioConfig) -> list:
    p = cfg.params
    k = _grid(cfg)
    d_l, d_r = transfer_D(k, p)
    c_l, c_r = transfer_C(k, p)
    cols = {
        "delta_k": k - p.k_c,
        "abs_D_L_sq": np.abs(d_l) ** 2,
        "abs_D_R_sq": np.abs(d_r) ** 2,
        "abs_C_L_sq": np.abs(c_l) ** 2,
        "abs_C_R_sq": np.abs(c_r) ** 2,
    }
    unitarity = float(np.max(np.abs(cols["abs_C_L_sq"] + cols["abs_C_R_sq"] - 1)))
    return [PlotSeries("fig2_transfer", cols, {"max_unitarity_residual": unitarity})]


def run_fig3(cfg: ScenarioConfig) -> list:
    p = cfg.params
    k = _grid(cfg)
    funcs = {"abs_f_c_sq": SpectralFunction.build(p, FactorKind.CAVITY)}
    for n in FIG3_ROUNDS:
        funcs[f"abs_f_{n}_sq"] = spectral_after_n(p, n, cfg.tolerance)
    cols = {"delta_k": k - p.k_c}
    checks = {}
    for name, f in funcs.items():
        vals = f.abs2(k)
        cols[name] = vals
        # trapezoid over the emitted grid plus the exact mass outside it
        inside = float(np.trapezoid(vals, k)) if hasattr(np, "trapezoid") else float(np.trapz(vals, k))
        tails = integrate_abs2(f, cfg.tolerance, bounds=(-math.inf, k[0])).value + integrate_abs2(
            f, cfg.tolerance, bounds=(k[-1], math.inf)
        ).value
        checks[name] = {"grid_trapezoid": inside, "outside_grid": tails, "total": inside + tails}
    return [PlotSeries("fig3_spectra", cols, {"normalization_check": checks})]


def _lambda_label(lam):
    return f"{lam:g}"


def run_fig4(cfg: ScenarioConfig) -> list:
    p = cfg.params
    N = np.arange(1, cfg.rounds + 1)
    cols = {"N": N}

    def one(lam):
        q = SystemParams.optimal(lam * p.kappa, kappa=p.kappa, k_c=p.k_c)
        return feedback_trace(q, cfg.rounds, cfg.tolerance)

    meta = {"telescoping_max_residual": {}}
    for lam, tr in zip(cfg.lambda_L_values, _pmap(cfg, one, cfg.lambda_L_values)):
        key = f"P_R[lambda_L={_lambda_label(lam)}]"
        cols[key] = tr.P_R
        meta["telescoping_max_residual"][key] = float(np.max(np.abs(tr.telescoping_residual())))
    cols["baseline[p=0.5]"] = [constant_p_baseline(0.5, int(n)) for n in N]
    return [PlotSeries("fig4_cumulative", cols, meta)]


def run_fig5(cfg: ScenarioConfig) -> list:
    p = cfg.params
    ratios = np.asarray(cfg.kappa_in_grid, dtype=float)
    cols = {"kappa_in_ratio": ratios}
    meta = {"nonincreasing": {}, "cavity_photon_p1_R": {}}

    def one(lam):
        q = SystemParams.optimal(lam * p.kappa, kappa=p.kappa, k_c=p.k_c)
        curve = [single_trial_prob(q, r * p.kappa, cfg.tolerance) for r in ratios]
        return curve, first_round_prob(q, cfg.tolerance)[0]

    for lam, (curve, p1) in zip(cfg.lambda_L_values, _pmap(cfg, one, cfg.lambda_L_values)):
        key = f"P_R_1[lambda_L={_lambda_label(lam)}]"
        cols[key] = curve
        meta["nonincreasing"][key] = bool(np.all(np.diff(curve) <= 1e-12))
        # D-based value for a photon prepared inside the cavity, for comparison at kappa_in = kappa
        meta["cavity_photon_p1_R"][key] = p1
    return [PlotSeries("fig5_single_trial", cols, meta)]


def run_sweep(cfg: ScenarioConfig) -> list:
    p = cfg.params
    sw = cfg.sweep
    values = [float(v) for v in sw["values"]]

    def one(v):
        d = p.as_dict()
        d[sw["field"]] = v * p.kappa if sw["field"] != "kappa" else v
        if sw["optimal_ratio"] and sw["field"] == "lambda_L":
            d["lambda_R"] = math.sqrt(2) * d["lambda_L"]
        q = SystemParams(**d)
        tr = feedback_trace(q, cfg.rounds, cfg.tolerance)
        return (
            tr.rounds[0].p_R,
            tr.rounds[0].p_L_cumulative,
            tr.rounds[-1].P_R_cumulative,
            single_trial_prob(q, q.kappa, cfg.tolerance),
            float(tr.terminating),
        )

    rows = _pmap(cfg, one, values)
    cols = {"value": values}
    for i, name in enumerate(["p1_R", "p1_L", f"P_R[N={cfg.rounds}]", "single_trial[kappa_in=kappa]", "terminating"]):
        cols[name] = [r[i] for r in rows]
    return [PlotSeries("sweep", cols, {"field": sw["field"]})]


def run_modes(cfg: ScenarioConfig) -> list:
    cav_cfg = cfg.cavity
    cav = MirrorCavity(_complex(cav_cfg["r"]), _complex(cav_cfg["t"]), float(cav_cfg["l"]))
    k = _grid(cfg)
    i_amp, r_amp = mode_amplitudes(k, cav)
    amps = PlotSeries("modes_amplitudes", {"k": k, "abs_I": np.abs(i_amp), "abs_R": np.abs(r_amp)})
    qm = find_quasimode(cav, float(cav_cfg["k_guess"]))
    peaks = peak_positions(cav, qm.k_c, int(cav_cfg["count"]))
    spacing = np.diff(peaks) if len(peaks) > 1 else np.array([math.nan])
    report = {
        "k_c": [qm.k_c],
        "kappa_fit": [qm.kappa_fit],
        "fit_residual": [qm.fit_residual],
        "half_max_width": [qm.half_max_width],
        "peak_spacing": [float(np.mean(spacing))],
        "peak_spacing_expected": [cav.free_spectral_range],
        "abs_I_max": [abs(mode_amplitudes(qm.k_c, cav)[0])],
        "abs_I_max_expected": [2 * abs(cav.t) / (1 - abs(cav.r))],
    }
    return [amps, PlotSeries("modes_report", report, {"good_cavity": cav.good_cavity})]


RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "sweep": run_sweep,
    "modes": run_modes,
}


def run(cfg: ScenarioConfig) -> list:
    cfg.resolve()
    series = RUNNERS[cfg.scenario](cfg)
    meta = cfg.metadata()
    for s in series:
        s.metadata = {"config": meta, **s.metadata}
    return series


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))  # shortest string that round-trips


def write_series(series: PlotSeries, directory, fmt: str = "csv") -> list:
    """Write ``series`` and return the created paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta_text = json.dumps(series.metadata, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(series.columns)
        w.writerow(names)
        for row in zip(*(series.columns[n] for n in names)):
            w.writerow([_fmt(x) for x in row])
        path = directory / f"{series.name}.csv"
        path.write_text(buf.getvalue(), encoding="utf-8")
        meta_path = directory / f"{series.name}.meta.json"
        meta_path.write_text(meta_text, encoding="utf-8")
        return [path, meta_path]
    if fmt == "json":
        doc = {"name": series.name, "metadata": series.metadata, "columns": series.columns}
        path = directory / f"{series.name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return [path]
    raise ConfigError(f"unknown output format {fmt!r}")


def read_series(path) -> PlotSeries:
    """Inverse of :func:`write_series`."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        return PlotSeries(doc["name"], doc["columns"], doc["metadata"])
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    cols = {n: [float(r[i]) for r in body] for i, n in enumerate(names)}
    meta_path = path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    return PlotSeries(path.stem, cols, meta)


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cqed-feedback",
        description="Reproduce single-photon feedback-protocol figure data.",
    )
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", type=Path, help="JSON file mirroring ScenarioConfig")
    ap.add_argument("--out", type=Path, help="output directory (overrides config)")
    ap.add_argument("--format", choices=("csv", "json"), help="output format (overrides config)")
    ap.add_argument("--tolerance", type=float, help="quadrature tolerance (overrides config)")
    ap.add_argument("--workers", type=int, help="threads for independent scenario points")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        data = {}
        if args.config is not None:
            data = json.loads(args.config.read_text(encoding="utf-8"))
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = ScenarioConfig.from_dict(args.scenario, data)
        out = dict(cfg.output)
        if args.out is not None:
            out["directory"] = str(args.out)
        if args.format is not None:
            out["format"] = args.format
        cfg.output = out
        if args.tolerance is not None:
            cfg.tolerance = args.tolerance
        if args.workers is not None:
            cfg.workers = args.workers
        cfg.resolve()
    except (ConfigError, DomainError, ParameterRangeError, TypeError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("scenario %s using %s kernels", cfg.scenario, _backend.BACKEND)
    try:
        series = run(cfg)
    except (QuadratureError, ConsistencyError, DegenerateSpectrumError, PoleProximityError, SearchError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for s in series:
        for path in write_series(s, cfg.output["directory"], cfg.output["format"]):
            log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
