"""Reproducible parameter sweeps emitting CSV/JSON artifacts.

A sweep is described by a small key-value config (or a named preset that
reproduces one figure-style experiment); each sweep point runs the
requested protocols/baselines and, where available, the closed-form
curves, and lands in one CSV row per (point, system).  The JSON manifest
records every resolved parameter and seed so a run can be reproduced
byte for byte.

Config grammar (one statement per line, ``#`` comments)::

    preset fig4              # start from a named preset
    sweep ps_over_n0_db 10 15 20 25 30
    protocols P1 P2 conv_sd  # systems to run
    slots 200000
    seed 7
    out results/fig4
    set theta 0.6            # SystemParams override
    set J 20

Swept variables: ``ps_over_n0_db``, ``theta``, ``delta``, ``d_sr``
(keeps ``d_sr + d_rd`` fixed at 2), ``J``.
"""

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dcsk_relay import montecarlo, theory
from dcsk_relay.params import SystemParams, reference_defaults

SIM_SYSTEMS = ("P1", "P2", "SNR1", "SNR2",
               "conv_sd", "conv_no_buffer_swipt", "conv_dcsk_relay")
SWEEP_VARS = ("ps_over_n0_db", "theta", "delta", "d_sr", "J")

PRESETS = {
    # BER vs SNR: proposed protocols with closed forms, plus comparators
    "fig4": dict(sweep=("ps_over_n0_db", [10, 15, 20, 25, 30]),
                 protocols=["P1", "P2", "conv_no_buffer_swipt", "conv_sd"],
                 metric="ber", slots=200_000),
    # BER vs power-splitting ratio at two SNRs (run one per config)
    "fig5": dict(sweep=("theta", [round(0.1 * k, 1) for k in range(1, 10)]),
                 protocols=["P1", "P2"], metric="ber", slots=200_000,
                 overrides={"ps_over_n0_db": 30.0}),
    "fig5_20db": dict(sweep=("theta", [round(0.1 * k, 1) for k in range(1, 10)]),
                      protocols=["P1", "P2"], metric="ber", slots=200_000,
                      overrides={"ps_over_n0_db": 20.0}),
    # BER vs selection threshold
    "fig6": dict(sweep=("delta", [0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]),
                 protocols=["P1", "P2"], metric="ber", slots=150_000,
                 overrides={"ps_over_n0_db": 25.0}),
    # BER vs source-relay distance split (d_sr + d_rd = 2, single path)
    "fig7": dict(sweep=("d_sr", [0.6, 0.8, 1.0, 1.2, 1.4]),
                 protocols=["P1", "P2", "conv_no_buffer_swipt", "conv_dcsk_relay"],
                 metric="ber", slots=150_000,
                 overrides={"ps_over_n0_db": 20.0}),
    # average delay vs threshold / buffer size
    "fig8": dict(sweep=("delta", [0.2, 0.5, 0.8, 1.05, 1.4, 1.8, 2.2, 2.6, 3.0]),
                 protocols=["P1", "P2"], metric="delay", slots=1_000_000,
                 overrides={"ps_over_n0_db": 30.0}),
    "fig9": dict(sweep=("J", [5, 10, 20, 40, 70, 100]),
                 protocols=["P1", "P2"], metric="delay", slots=1_000_000,
                 overrides={"ps_over_n0_db": 30.0}),
    # proposed vs SNR-based selection
    "fig10": dict(sweep=("ps_over_n0_db", [15, 20, 25, 30]),
                  protocols=["P1", "P2", "SNR1", "SNR2"],
                  metric="ber", slots=200_000),
    "fig11": dict(sweep=("ps_over_n0_db", [15, 20, 25, 30]),
                  protocols=["P1", "P2", "SNR1", "SNR2"],
                  metric="delay", slots=1_000_000),
}


@dataclass
class ExperimentConfig:
    figure_id: str
    sweep_var: str
    sweep_grid: list
    protocols: list
    metric: str                      # "ber" or "delay"
    slots: int
    seed: int = 1
    workers: int = 1
    output_dir: str = "results"
    overrides: dict = field(default_factory=dict)

    def resolved_params(self, value) -> SystemParams:
        """SystemParams for one sweep point."""
        over = dict(self.overrides)
        db = float(over.pop("ps_over_n0_db", 25.0))
        if self.sweep_var == "ps_over_n0_db":
            db = float(value)
        elif self.sweep_var == "d_sr":
            over["d_sr"] = float(value)
            over["d_rd"] = 2.0 - float(value)
        elif self.sweep_var == "J":
            over["J"] = int(value)
        else:
            over[self.sweep_var] = float(value)
        return reference_defaults(db, slots=self.slots, seed=self.seed, **over)


def validate_config(raw_text: str) -> ExperimentConfig:
    """Parse and validate the key-value config format."""
    cfg: dict = dict(figure_id="custom", protocols=None, metric="ber",
                     slots=100_000, seed=1, workers=1,
                     output_dir="results", overrides={}, sweep=None)

    def fail(lineno, msg):
        raise ValueError(f"config line {lineno}: {msg}")

    for lineno, line in enumerate(raw_text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        if key == "preset":
            if len(args) != 1 or args[0] not in PRESETS:
                fail(lineno, f"unknown preset {args}; choose from {sorted(PRESETS)}")
            preset = PRESETS[args[0]]
            cfg["figure_id"] = args[0]
            cfg["sweep"] = preset["sweep"]
            cfg["protocols"] = list(preset["protocols"])
            cfg["metric"] = preset["metric"]
            cfg["slots"] = preset["slots"]
            cfg["overrides"].update(preset.get("overrides", {}))
        elif key == "sweep":
            if len(args) < 2:
                fail(lineno, "sweep needs a variable and a non-empty grid")
            if args[0] not in SWEEP_VARS:
                fail(lineno, f"unknown sweep variable {args[0]!r}; choose from {SWEEP_VARS}")
            try:
                grid = [float(v) for v in args[1:]]
            except ValueError:
                fail(lineno, "sweep grid values must be numeric")
            cfg["sweep"] = (args[0], grid)
        elif key == "protocols":
            bad = [a for a in args if a not in SIM_SYSTEMS]
            if bad:
                fail(lineno, f"unknown systems {bad}; choose from {SIM_SYSTEMS}")
            if not args:
                fail(lineno, "protocols list is empty")
            cfg["protocols"] = args
        elif key == "metric":
            if args != ["ber"] and args != ["delay"]:
                fail(lineno, "metric must be 'ber' or 'delay'")
            cfg["metric"] = args[0]
        elif key in ("slots", "seed", "workers"):
            try:
                cfg[key] = int(args[0])
            except (IndexError, ValueError):
                fail(lineno, f"{key} needs one integer")
        elif key == "out":
            if len(args) != 1:
                fail(lineno, "out needs one path")
            cfg["output_dir"] = args[0]
        elif key == "set":
            if len(args) != 2:
                fail(lineno, "set needs a field and a value")
            cfg["overrides"][args[0]] = float(args[1])
        else:
            fail(lineno, f"unknown statement {key!r}")

    if cfg["sweep"] is None:
        raise ValueError("config defines no sweep (use 'preset' or 'sweep')")
    var, grid = cfg["sweep"]
    if len(grid) == 0:
        raise ValueError("sweep grid is empty")
    if len(grid) > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ValueError("sweep grid must be strictly monotone")
    if cfg["protocols"] is None:
        raise ValueError("config selects no protocols")
    # physics sanity on overrides
    over = cfg["overrides"]
    for name in ("theta", "eta"):
        if name in over and not (0.0 <= over[name] <= 1.0):
            raise ValueError(f"override {name}={over[name]} out of [0, 1]")
    for name in ("P_S", "P_D", "P_I"):
        if name in over and over[name] < 0.0:
            raise ValueError(f"override {name}={over[name]} must be non-negative")
    if "delta" in over and over["delta"] < 0.0:
        raise ValueError("override delta must be non-negative")
    if over.get("delta", None) == 0.0:
        warnings.warn("delta = 0 is degenerate: the source link always wins "
                      "the comparison", stacklevel=2)
    if var == "theta" and not all(0.0 <= v <= 1.0 for v in grid):
        raise ValueError("theta sweep values must lie in [0, 1]")
    return ExperimentConfig(figure_id=cfg["figure_id"], sweep_var=var,
                            sweep_grid=list(grid), protocols=cfg["protocols"],
                            metric=cfg["metric"], slots=cfg["slots"],
                            seed=cfg["seed"], workers=cfg["workers"],
                            output_dir=cfg["output_dir"],
                            overrides=cfg["overrides"])


def _theory_metric(config: ExperimentConfig, params: SystemParams, system: str):
    """Closed-form companion value for the proposed protocols, if defined."""
    if system not in ("P1", "P2"):
        return None
    try:
        if config.metric == "ber":
            point = (theory.ber_protocol1 if system == "P1"
                     else theory.ber_protocol2)(params, check_convergence=False)
            return point.ber_bound
        return (theory.delay_protocol1 if system == "P1"
                else theory.delay_protocol2)(params)
    except ValueError:
        return None


def _run_point(config: ExperimentConfig, index: int, system: str) -> dict:
    value = config.sweep_grid[index]
    params = config.resolved_params(value).with_overrides(
        seed=int(np.random.SeedSequence((config.seed, index)).generate_state(1)[0]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if system in montecarlo.PROTOCOLS:
            result = montecarlo.run_protocol_sim(
                params, system, simulate_bits=(config.metric == "ber"))
        else:
            result = montecarlo.run_baseline_sim(params, system)
        sim = result.end_to_end_ber if config.metric == "ber" else result.avg_delay_slots
        stderr = result.ber_stderr if config.metric == "ber" else 0.0
        theory_value = _theory_metric(config, params, system)
    return dict(index=index, sweep=value, protocol=system,
                sim=sim, stderr=stderr, theory=theory_value,
                seed=params.seed, slots=params.slots,
                flags=";".join(result.flags))


def run_experiment(config: ExperimentConfig) -> tuple[Path, Path]:
    """Execute the sweep and write ``<figure_id>.csv`` plus a JSON manifest.

    Returns the two paths.  Per-point failures are recorded in the CSV
    ``flags`` column and do not abort the run.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(i, system) for i in range(len(config.sweep_grid))
             for system in config.protocols]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_point, *zip(*[(config, i, s) for i, s in tasks])))
    else:
        rows = [_run_point(config, i, s) for i, s in tasks]
    rows.sort(key=lambda r: (r["index"], config.protocols.index(r["protocol"])))

    csv_path = out_dir / f"{config.figure_id}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(["sweep", "protocol", "sim", "stderr", "theory", "flags"])
        for r in rows:
            writer.writerow([repr(float(r["sweep"])), r["protocol"],
                             _fmt(r["sim"]), _fmt(r["stderr"]),
                             _fmt(r["theory"]), r["flags"]])

    manifest = dict(
        figure_id=config.figure_id, sweep_var=config.sweep_var,
        sweep_grid=config.sweep_grid, protocols=config.protocols,
        metric=config.metric, slots=config.slots, seed=config.seed,
        overrides=config.overrides,
        point_seeds=[int(np.random.SeedSequence((config.seed, i)).generate_state(1)[0])
                     for i in range(len(config.sweep_grid))],
        csv=csv_path.name,
    )
    json_path = out_dir / f"{config.figure_id}_manifest.json"
    with open(json_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dcsk-relay-sim",
        description="Run a buffer-aided DCSK-SWIPT relay experiment sweep.")
    parser.add_argument("--config", type=Path, help="config file path")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named preset")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--workers", type=int, help="parallel worker processes")
    parser.add_argument("--slots", type=int, help="slots per sweep point")
    args = parser.parse_args(argv)

    lines = []
    if args.preset:
        lines.append(f"preset {args.preset}")
    if args.config:
        try:
            lines.append(args.config.read_text())
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    if not lines:
        parser.print_usage(sys.stderr)
        print("error: provide --preset and/or --config", file=sys.stderr)
        return 2
    for name in ("out", "seed", "workers", "slots"):
        value = getattr(args, name)
        if value is not None:
            lines.append(f"{name} {value}")
    try:
        config = validate_config("\n".join(lines))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        csv_path, json_path = run_experiment(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path} and {json_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
