"""Command-line entry point: single capacity estimates and parameter sweeps to CSV.

    activeris simulate --config link.cfg --seed 7 --samples 100000
    activeris sweep --config link.cfg --param rho_db --grid -20:30:2 --output capacity_vs_rho.csv
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .capacity import (
    DEFAULT_SAMPLES,
    CapacityEstimate,
    SelfCheckError,
    estimate_from_samples,
    snr_samples,
)
from .params import (
    CONTINUOUS,
    DISABLED,
    ConfigError,
    SnrMode,
    SystemConfig,
    config_from_mapping,
    db_to_linear,
    implied_kappa,
    link_gains,
    read_config_mapping,
)

CSV_HEADER = [
    "scenario",
    "param_name",
    "param_value",
    "capacity_bits",
    "std_err",
    "ci_low",
    "ci_high",
    "n_samples",
    "seed",
]

# sweep parameter -> configuration file key
SWEEP_PARAMETERS = {
    "rho_db": "rho_db",
    "num_elements": "num_elements",
    "quant_bits": "quant_bits",
    "beta": "beta",
    "phi": "phi",
    "zeta": "zeta",
}

SCENARIO_PRESETS: dict[str, list[tuple[str, dict[str, str]]]] = {
    "standard": [
        ("b2_misaligned", {"quant_bits": "2", "misalignment": "enabled"}),
        ("continuous_misaligned", {"quant_bits": "continuous", "misalignment": "enabled"}),
        ("b2_aligned", {"quant_bits": "2", "misalignment": "disabled"}),
        ("continuous_aligned", {"quant_bits": "continuous", "misalignment": "disabled"}),
    ],
    "bits": [("continuous_misaligned", {"quant_bits": "continuous", "misalignment": "enabled"})]
    + [(f"b{b}_misaligned", {"quant_bits": str(b), "misalignment": "enabled"}) for b in (8, 4, 3, 2, 1)],
    "base": [("base", {})],
}

DEFAULT_GRID = "-20:30:2"


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: list
    scenarios: list[tuple[str, dict[str, str]]] = field(
        default_factory=lambda: list(SCENARIO_PRESETS["standard"])
    )

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError("param", f"unknown sweep parameter {self.parameter!r}")
        if not self.values:
            raise ConfigError("grid", "sweep grid is empty")
        if not self.scenarios:
            raise ConfigError("scenarios", "no scenarios given")
        names = [name for name, _ in self.scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenarios", f"duplicate scenario names in {names}")


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    param_name: str
    param_value: object
    estimate: CapacityEstimate
    seed: int

    def as_csv(self) -> list[str]:
        est = self.estimate
        return [
            self.scenario,
            self.param_name,
            _fmt_value(self.param_value),
            _fmt(est.mean_bits),
            _fmt(est.std_err),
            _fmt(est.ci_low),
            _fmt(est.ci_high),
            str(est.n_samples),
            str(self.seed),
        ]


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _fmt_value(value) -> str:
    if value is CONTINUOUS:
        return "continuous"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt(value)


def parse_grid(text: str, parameter: str) -> list:
    """``start:stop:step`` (stop inclusive) or a comma list ``v1,v2,...``."""
    integer = parameter in ("num_elements", "quant_bits")
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(text)
            start, stop, step = (float(p) for p in parts)
            if step == 0 or (stop - start) / step < 0:
                raise ValueError(text)
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = []
            for item in text.split(","):
                item = item.strip()
                if parameter == "quant_bits" and item.lower() == "continuous":
                    values.append(CONTINUOUS)
                else:
                    values.append(float(item))
    except ValueError:
        raise ConfigError("grid", f"cannot parse grid {text!r}") from None
    if integer:
        out = []
        for v in values:
            if v is CONTINUOUS:
                out.append(v)
            elif float(v).is_integer():
                out.append(int(v))
            else:
                raise ConfigError("grid", f"{parameter} needs integer values, got {v}")
        values = out
    if not values:
        raise ConfigError("grid", "sweep grid is empty")
    return values


def load_scenarios(text: str) -> list[tuple[str, dict[str, str]]]:
    """A preset name, or a path to an INI file with one ``[section]`` per scenario."""
    if text in SCENARIO_PRESETS:
        return list(SCENARIO_PRESETS[text])
    path = Path(text)
    if not path.is_file():
        raise ConfigError(
            "scenarios", f"{text!r} is neither a preset ({', '.join(SCENARIO_PRESETS)}) nor a file"
        )
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError("scenarios", str(exc)) from None
    return [(name, dict(parser[name])) for name in parser.sections()]


def scenario_config(base: dict[str, str], overrides: dict[str, str], parameter: str | None = None, value=None) -> SystemConfig:
    raw = dict(base)
    raw.update(overrides)
    if parameter is not None:
        raw[SWEEP_PARAMETERS[parameter]] = "continuous" if value is CONTINUOUS else repr(value)
    return config_from_mapping(raw)


def sweep_cells(
    base: dict[str, str],
    sweep: SweepSpec,
    seed: int,
    n_samples: int,
    threads: int = 1,
) -> Iterator[tuple[str, object, np.ndarray]]:
    """Yield ``(scenario, value, gammas)`` per grid cell in output order.

    Every cell uses the same master seed, so scenarios and grid values see
    the same channel substreams.  For rho-controlled rho_db sweeps the SNR is
    linear in rho_s; the unit-rho samples are generated once per scenario and
    rescaled, which gives the same bits as generating them afresh.
    """
    configs = {}
    for name, overrides in sweep.scenarios:
        configs[name] = [scenario_config(base, overrides, sweep.parameter, v) for v in sweep.values]

    for name, _ in sweep.scenarios:
        unit = None
        for value, cfg in zip(sweep.values, configs[name]):
            if sweep.parameter == "rho_db" and cfg.snr_mode is SnrMode.RHO_CONTROLLED:
                if unit is None:
                    unit = snr_samples(cfg.with_changes(rho_db=0.0), n_samples, seed, threads)
                gammas = db_to_linear(cfg.rho_db) * unit
            else:
                gammas = snr_samples(cfg, n_samples, seed, threads)
            yield name, value, gammas


def run_sweep(
    config_path: str | Path,
    sweep: SweepSpec,
    output_path: str | Path,
    seed: int = 0,
    n_samples: int = DEFAULT_SAMPLES,
    threads: int = 1,
) -> list[SweepRow]:
    """Write one CSV row per (scenario, value); nothing is left behind on failure."""
    base = read_config_mapping(config_path)
    rows = [
        SweepRow(name, sweep.parameter, value, estimate_from_samples(gammas), seed)
        for name, value, gammas in sweep_cells(base, sweep, seed, n_samples, threads)
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())

    output_path = Path(output_path)
    fd, tmp = tempfile.mkstemp(dir=output_path.parent or ".", prefix=f".{output_path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, output_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return rows


def describe(cfg: SystemConfig) -> str:
    gains = link_gains(cfg)
    bits = "continuous" if cfg.quant_bits is CONTINUOUS else f"{cfg.quant_bits} bits"
    if cfg.misalignment is DISABLED:
        mis = "disabled (h_M = 1)"
    else:
        mis = f"phi = {cfg.misalignment.phi:.6g}, zeta = {cfg.misalignment.zeta:.6g}"
    if cfg.snr_mode is SnrMode.RHO_CONTROLLED:
        mode = f"rho_controlled, rho_s = {cfg.rho_db:.6g} dB ({db_to_linear(cfg.rho_db):.6g})"
    else:
        mode = f"physical, P_s = {cfg.tx_power:.6g} W, rho_s computed per draw"
    lines = [
        f"propagation gain h_P : {gains.h_p:.9g}",
        f"absorption gain h_A  : {gains.h_a:.9g}",
        f"path gain h_L        : {gains.h_l:.9g}",
        f"implied kappa        : {implied_kappa(cfg):.9g} 1/m",
        f"RIS elements M       : {cfg.num_elements}",
        f"amplification beta   : {cfg.beta:.6g}",
        f"phase resolution     : {bits}",
        f"misalignment         : {mis}",
        f"SNR mode             : {mode}",
    ]
    return "\n".join(lines)


def run_single(
    config_path: str | Path,
    seed: int = 0,
    n_samples: int = DEFAULT_SAMPLES,
    threads: int = 1,
) -> tuple[CapacityEstimate, str]:
    cfg = config_from_mapping(read_config_mapping(config_path))
    est = estimate_from_samples(snr_samples(cfg, n_samples, seed, threads))
    report = "\n".join(
        [
            describe(cfg),
            f"ergodic capacity     : {est.mean_bits:.9g} bits/s/Hz",
            f"standard error       : {est.std_err:.3g}",
            f"95% CI               : [{est.ci_low:.9g}, {est.ci_high:.9g}]",
            f"samples / seed       : {est.n_samples} / {seed}",
        ]
    )
    return est, report


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activeris", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)
        p.add_argument("--threads", type=_positive_int, default=1)

    common(sub.add_parser("simulate", help="estimate capacity for one configuration"))
    sweep = sub.add_parser("sweep", help="sweep one parameter across scenarios, write CSV")
    common(sweep)
    sweep.add_argument("--param", default="rho_db", choices=sorted(SWEEP_PARAMETERS))
    sweep.add_argument("--grid", default=DEFAULT_GRID, help="start:stop:step or v1,v2,...")
    sweep.add_argument("--scenarios", default="standard", help="preset name or INI file")
    sweep.add_argument("--output", required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            _, report = run_single(args.config, args.seed, args.samples, args.threads)
            print(report)
        else:
            spec = SweepSpec(args.param, parse_grid(args.grid, args.param), load_scenarios(args.scenarios))
            rows = run_sweep(args.config, spec, args.output, args.seed, args.samples, args.threads)
            print(f"wrote {len(rows)} rows to {args.output}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SelfCheckError as exc:
        print(f"internal consistency check failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
