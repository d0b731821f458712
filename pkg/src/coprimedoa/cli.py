"""Scenario-driven command line: run estimation pipelines, generate presets.

Config files are single JSON documents::

    {
      "arrays":     [{"label": "A", "spacing": 6, "num_sensors": 9}, ...],
      "groups":     [{"doas": [...], "source": {"kind": "qpsk", "power": 1.0},
                      "coeffs": null}, ...],
      "estimation": {"K_A": 6, "K_B": 7, "signal_dim": null, "grid_points": 4096},
      "noise":      {"snr_db": 5.0},
      "run":        {"snapshots": 2000, "seed": 1234}
    }

``coeffs`` entries are ``[re, im]`` pairs or null (drawn from the seed at run
time); ``snr_db: null`` means noise-free.  Exit codes: 0 success, 1 config
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError
from .geometry import (
    SparseArray,
    default_overlap_tol,
    predict_false_peak,
    wrap_angle,
)
from .simulation import Scenario, SignalGroup, SourceKind, synthesize
from .cumulants import FcmGeometry, empirical_moments, estimate_fcm
from .smoothing import smooth_fcm, smoothing_term_count
from .spectrum import (
    SpectrumGrid,
    combined_null_spectrum,
    default_grid,
    eigengap_signal_dim,
    find_peaks,
    null_spectrum,
    scenario_signal_dim,
    subspace,
)
from .baseline import coarray_correlations, virtual_ula_music
from . import io as io_formats

METHODS = ("fcm", "fcm-smoothed", "baseline")
PAIR_SETS = {
    "ab": [("A", "B")],
    "ac": [("A", "C")],
    "bc": [("B", "C")],
    "abc": [("A", "B"), ("A", "C"), ("B", "C")],
}
SIM1_DEFAULT_SEED = 1234
SIM2_DEFAULT_SEED = 1234


@dataclass
class EstimationConfig:
    subarray_sizes: Dict[str, int]
    signal_dim: Optional[int]
    grid_points: int


# ---------------------------------------------------------------------------
# config parsing / validation
# ---------------------------------------------------------------------------


def _fail(path: str, message: str) -> ConfigurationError:
    return ConfigurationError(f"{path}: {message}")


def parse_config(doc: dict) -> Tuple[Scenario, EstimationConfig, List[str]]:
    """Validate a config document and build the scenario.

    Returns the scenario, estimation settings and a list of advisory
    warnings (empty for well-formed experiment configs).
    """
    warnings: List[str] = []
    if not isinstance(doc, dict):
        raise _fail("$", "config root must be a JSON object")
    for section in ("arrays", "groups", "estimation", "noise", "run"):
        if section not in doc:
            raise _fail("$", f"missing section {section!r}")

    arrays: List[SparseArray] = []
    for i, spec in enumerate(doc["arrays"]):
        where = f"arrays[{i}]"
        for key in ("label", "spacing", "num_sensors"):
            if key not in spec:
                raise _fail(where, f"missing {key!r}")
        try:
            arrays.append(
                SparseArray(int(spec["spacing"]), int(spec["num_sensors"]), str(spec["label"]))
            )
        except ConfigurationError as exc:
            raise _fail(where, str(exc)) from exc
    labels = [a.label for a in arrays]
    if len(set(labels)) != len(labels):
        raise _fail("arrays", f"duplicate labels in {labels}")
    from math import gcd

    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            if gcd(arrays[i].spacing, arrays[j].spacing) != 1:
                raise _fail(
                    "arrays",
                    f"spacings of '{arrays[i].label}' and '{arrays[j].label}' "
                    f"({arrays[i].spacing}, {arrays[j].spacing}) are not coprime",
                )

    groups: List[SignalGroup] = []
    for i, spec in enumerate(doc["groups"]):
        where = f"groups[{i}]"
        if "doas" not in spec or not spec["doas"]:
            raise _fail(where, "missing or empty 'doas'")
        source_spec = spec.get("source", {})
        kind = source_spec.get("kind")
        if kind not in ("qpsk", "qam4", "gaussian"):
            raise _fail(where + ".source", f"unknown kind {kind!r}")
        power = float(source_spec.get("power", 1.0))
        coeffs = None
        if spec.get("coeffs") is not None:
            raw = spec["coeffs"]
            if len(raw) != len(spec["doas"]):
                raise _fail(where + ".coeffs", "length must match doas")
            coeffs = []
            for k, pair in enumerate(raw):
                value = complex(pair[0], pair[1])
                if abs(value) == 0:
                    raise _fail(f"{where}.coeffs[{k}]", "coefficient must be nonzero")
                coeffs.append(value)
            coeffs = tuple(coeffs)
        try:
            groups.append(
                SignalGroup(
                    doas=tuple(float(t) for t in spec["doas"]),
                    source=SourceKind(kind, power),
                    coeffs=coeffs,
                )
            )
        except ConfigurationError as exc:
            raise _fail(where, str(exc)) from exc
        if kind == "gaussian":
            warnings.append(
                f"{where}: gaussian sources have zero fourth-order cumulant and are "
                "invisible to the cumulant estimators"
            )

    est_spec = doc["estimation"]
    sizes: Dict[str, int] = {}
    for array in arrays:
        key = f"K_{array.label}"
        if key not in est_spec:
            raise _fail("estimation", f"missing {key!r} for array '{array.label}'")
        k = int(est_spec[key])
        if not (1 <= k <= array.num_sensors):
            raise _fail(
                "estimation." + key,
                f"must be in [1, {array.num_sensors}] for array '{array.label}', got {k}",
            )
        sizes[array.label] = k
    signal_dim = est_spec.get("signal_dim")
    if signal_dim is not None:
        signal_dim = int(signal_dim)
        if signal_dim < 1:
            raise _fail("estimation.signal_dim", "must be a positive integer or null")
    grid_points = int(est_spec.get("grid_points", 4096))
    if grid_points < 16:
        raise _fail("estimation.grid_points", "must be >= 16")

    snr_db = doc["noise"].get("snr_db", None)
    snr_db = float("inf") if snr_db is None else float(snr_db)
    run_spec = doc["run"]
    if "snapshots" not in run_spec or "seed" not in run_spec:
        raise _fail("run", "needs 'snapshots' and 'seed'")

    try:
        scenario = Scenario(
            groups=tuple(groups),
            arrays=tuple(arrays),
            snr_db=snr_db,
            num_snapshots=int(run_spec["snapshots"]),
            seed=int(run_spec["seed"]),
        )
    except ConfigurationError as exc:
        raise _fail("$", str(exc)) from exc

    q_max = max(g.size for g in groups)
    for array in arrays:
        shifts = array.num_sensors - sizes[array.label] + 1
        if shifts < q_max:
            warnings.append(
                f"estimation.K_{array.label}: only {shifts} subarray offsets but the largest "
                f"coherent group has {q_max} signals; coherent DOAs may stay unresolved"
            )
    return scenario, EstimationConfig(sizes, signal_dim, grid_points), warnings


def load_config(path) -> Tuple[Scenario, EstimationConfig, List[str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _draw_separated(rng, count: int, min_gap: float, bound: float) -> Optional[np.ndarray]:
    """Dart-throw DOAs in [-bound, bound] keeping pairwise circular gaps >= min_gap."""
    doas: List[float] = []
    for _ in range(400 * count):
        cand = rng.uniform(-bound, bound)
        if all(abs(wrap_angle(cand - t)) >= min_gap for t in doas):
            doas.append(float(cand))
            if len(doas) == count:
                return np.array(doas)
    return None


def _coherent_pair_ok(array_a, array_b, size_a, size_b, p: float, q: float) -> bool:
    """A coherent pair is admissible when its phase nodes are well separated
    on both arrays and it predicts no (near-)exact grating-lobe overlap.

    The per-array phase separation ``|wrap(spacing * (p - q))| >= 1.2`` keeps
    the Dirichlet correlation of the subarray-offset Vandermonde rows below
    0.3, so the weakest dimension the smoothing restores stays an order of
    magnitude above the fourth-order sampling noise floor at the preset's
    snapshot count.  Overlap mismatches beyond ~0.06 rad leave the composite
    beams misaligned by a good fraction of a beamwidth, so the resulting
    spectral dip is far too shallow to compete with true peaks; only tighter
    overlaps are vetoed.
    """
    for spacing in (array_a.spacing, array_b.spacing):
        if abs(wrap_angle(spacing * (p - q))) < 1.2:
            return False
    veto_tol = min(0.06, default_overlap_tol(array_a, size_a, array_b, size_b))
    for theta_p, theta_q in ((p, q), (q, p)):
        if predict_false_peak(array_a, size_a, array_b, size_b, theta_p, theta_q, veto_tol):
            return False
    return True


def _sim1_doas(seed: int) -> List[float]:
    """Ten well-separated DOAs (min spacing 0.08*pi) for the two-array preset.

    Rejection-sampled from the seed: coherent pairs (the last six entries,
    taken two at a time) must not alias on either array and must not set up a
    near-exact grating-lobe overlap on coarray AB, so the preset exercises
    the smoothing gain without the false-peak mechanism.
    """
    array_a = SparseArray(6, 9, "A")
    array_b = SparseArray(5, 10, "B")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(7,))))
    for _ in range(200):
        doas = _draw_separated(rng, 10, 0.08 * np.pi, 0.95 * np.pi)
        if doas is None:
            continue
        for _ in range(200):
            order = rng.permutation(10)
            pairs = [(doas[order[4 + 2 * g]], doas[order[5 + 2 * g]]) for g in range(3)]
            if all(_coherent_pair_ok(array_a, array_b, 6, 7, p, q) for p, q in pairs):
                return [float(doas[i]) for i in order]
    raise RuntimeError("could not draw an admissible DOA set for the sim1 preset")


def make_scenario(preset: str, seed: Optional[int] = None) -> dict:
    """Build a ready-to-run config document for one of the bundled presets."""
    if preset == "sim1":
        seed = SIM1_DEFAULT_SEED if seed is None else int(seed)
        doas = _sim1_doas(seed)
        kinds = ["qpsk", "qam4"]
        groups = [
            {"doas": [doas[i]], "source": {"kind": kinds[i % 2], "power": 1.0}, "coeffs": None}
            for i in range(4)
        ]
        groups += [
            {
                "doas": [doas[4 + 2 * g], doas[5 + 2 * g]],
                "source": {"kind": kinds[g % 2], "power": 1.0},
                "coeffs": None,
            }
            for g in range(3)
        ]
        return {
            "arrays": [
                {"label": "A", "spacing": 6, "num_sensors": 9},
                {"label": "B", "spacing": 5, "num_sensors": 10},
            ],
            "groups": groups,
            "estimation": {"K_A": 6, "K_B": 7, "signal_dim": None, "grid_points": 4096},
            "noise": {"snr_db": 5.0},
            "run": {"snapshots": 2000, "seed": seed},
        }
    if preset == "sim2":
        seed = SIM2_DEFAULT_SEED if seed is None else int(seed)
        pi = np.pi
        groups = [
            {"doas": [-0.6 * pi, 0.2 * pi, 0.3 * pi], "source": {"kind": "qpsk", "power": 1.0}, "coeffs": None},
            {"doas": [-0.5 * pi, -0.3 * pi], "source": {"kind": "qam4", "power": 1.0}, "coeffs": None},
            {"doas": [-0.4 * pi], "source": {"kind": "qpsk", "power": 1.0}, "coeffs": None},
            {"doas": [-0.1 * pi], "source": {"kind": "qam4", "power": 1.0}, "coeffs": None},
            {"doas": [0.1 * pi], "source": {"kind": "qpsk", "power": 1.0}, "coeffs": None},
            {"doas": [0.25 * pi], "source": {"kind": "qam4", "power": 1.0}, "coeffs": None},
        ]
        return {
            "arrays": [
                {"label": "A", "spacing": 6, "num_sensors": 9},
                {"label": "B", "spacing": 5, "num_sensors": 10},
                {"label": "C", "spacing": 7, "num_sensors": 8},
            ],
            "groups": groups,
            "estimation": {
                "K_A": 6,
                "K_B": 7,
                "K_C": 5,
                "signal_dim": None,
                "grid_points": 4096,
            },
            "noise": {"snr_db": 5.0},
            "run": {"snapshots": 2000, "seed": seed},
        }
    raise ConfigurationError(f"unknown preset {preset!r} (expected 'sim1' or 'sim2')")


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    estimates: list
    spectrum: SpectrumGrid
    meta: dict


def run_pipeline(
    scenario: Scenario,
    est: EstimationConfig,
    method: str = "fcm-smoothed",
    arrays_sel: str = "ab",
    combine: bool = False,
) -> RunResult:
    """Execute synthesize -> moments -> FCM -> smooth -> subspace -> spectrum -> peaks."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}, expected one of {METHODS}")
    if arrays_sel not in PAIR_SETS:
        raise ConfigurationError(f"unknown array selection {arrays_sel!r}")
    if arrays_sel == "abc" and not combine:
        raise ConfigurationError("--arrays abc requires --combine")
    if combine and arrays_sel != "abc":
        raise ConfigurationError("--combine requires --arrays abc")
    if method == "baseline" and combine:
        raise ConfigurationError("the baseline method works on a single coarray pair")

    started = time.perf_counter()
    snapshots = synthesize(scenario)
    grid = default_grid(est.grid_points)
    num_signals = scenario.total_signals

    pair_meta: Dict[str, dict] = {}
    spectra: List[SpectrumGrid] = []
    for label_a, label_b in PAIR_SETS[arrays_sel]:
        array_a = scenario.array(label_a)
        array_b = scenario.array(label_b)
        snap_a, snap_b = snapshots.pair(label_a, label_b)
        pair_key = f"{label_a}{label_b}"

        if method == "baseline":
            lags = coarray_correlations(snap_a, snap_b, array_a.spacing, array_b.spacing)
            spec = virtual_ula_music(lags, num_signals, grid)
            pair_meta[pair_key] = {
                "method": "baseline",
                "window": array_a.spacing * array_b.spacing + 1,
                "missing_lags": lags.lags[~lags.present].tolist(),
            }
        else:
            geometry = FcmGeometry.full(array_a, array_b)
            fcm = estimate_fcm(empirical_moments(snap_a, snap_b, geometry))
            size_a, size_b = array_a.num_sensors, array_b.num_sensors
            terms = 1
            if method == "fcm-smoothed":
                size_a = est.subarray_sizes[label_a]
                size_b = est.subarray_sizes[label_b]
                terms = smoothing_term_count(fcm, size_a, size_b)
                fcm = smooth_fcm(fcm, size_a, size_b)
            derived = scenario_signal_dim(
                scenario, array_a, array_b, size_a, size_b, smoothed=(method == "fcm-smoothed")
            )
            used = est.signal_dim if est.signal_dim is not None else derived
            model = subspace(fcm, signal_dim=used)
            spec = null_spectrum(model, fcm.geometry, grid)
            pair_meta[pair_key] = {
                "matrix_size": fcm.size,
                "smoothing_terms": terms,
                "signal_dim_used": used,
                "signal_dim_derived": derived,
                "signal_dim_eigengap": eigengap_signal_dim(model.eigenvalues),
                "eigenvalues": model.eigenvalues.tolist(),
            }
        spectra.append(spec)

    spectrum = combined_null_spectrum(*spectra) if combine else spectra[0]
    estimates = find_peaks(spectrum, expected_count=num_signals)
    elapsed = time.perf_counter() - started

    meta = {
        "method": method,
        "arrays": arrays_sel,
        "combine": combine,
        "seed": scenario.seed,
        "snapshots": scenario.num_snapshots,
        "snr_db": scenario.snr_db,
        "snr_convention": "per-sensor total signal power over noise power, "
        "averaged over sensors and arrays",
        "noise_power": snapshots.noise_power,
        "grid_points": est.grid_points,
        "doas": [list(g.doas) for g in scenario.groups],
        "coeffs": [[[c.real, c.imag] for c in eta] for eta in snapshots.coeffs],
        "num_estimates": len(estimates),
        "pairs": pair_meta,
        "wall_time_s": elapsed,
    }
    return RunResult(estimates=estimates, spectrum=spectrum, meta=meta)


def run_command(args) -> int:
    scenario, est, warnings = load_config(args.config)
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=int(args.seed))
    if args.grid_points is not None:
        est = dataclasses.replace(est, grid_points=int(args.grid_points))

    result = run_pipeline(
        scenario,
        est,
        method=args.method,
        arrays_sel=args.arrays,
        combine=args.combine,
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    io_formats.write_spectrum_csv(out_dir / "spectrum.csv", result.spectrum, method=args.method)
    io_formats.write_estimates_json(out_dir / "estimates.json", result.estimates)
    result.meta["config_path"] = str(args.config)
    io_formats.write_meta_json(out_dir / "meta.json", result.meta)
    print(
        f"wrote {out_dir / 'spectrum.csv'}, {out_dir / 'estimates.json'}, "
        f"{out_dir / 'meta.json'} ({len(result.estimates)} estimates)"
    )
    return 0


def make_scenario_command(args) -> int:
    doc = make_scenario(args.preset, seed=args.seed)
    out = Path(args.out) if args.out else Path(f"{args.preset}.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coprimedoa",
        description="DOA estimation of coherent signals on coprime arrays "
        "via fourth-order cumulants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run an estimation pipeline from a config file")
    runp.add_argument("config", help="path to the scenario config JSON")
    runp.add_argument("--out-dir", default=".", help="directory for output artifacts")
    runp.add_argument("--seed", type=int, default=None, help="override the run seed")
    runp.add_argument("--grid-points", type=int, default=None, help="override the DOA grid size")
    runp.add_argument("--method", choices=METHODS, default="fcm-smoothed")
    runp.add_argument("--arrays", choices=sorted(PAIR_SETS), default="ab")
    runp.add_argument("--combine", action="store_true", help="sum the null spectra of all pairs")
    runp.set_defaults(func=run_command)

    mk = sub.add_parser("make-scenario", help="write a bundled preset config")
    mk.add_argument("preset", choices=("sim1", "sim2"))
    mk.add_argument("--out", default=None, help="output path (default <preset>.json)")
    mk.add_argument("--seed", type=int, default=None, help="seed recorded into the preset")
    mk.set_defaults(func=make_scenario_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
