"""Command-line front end: analytic outage, Monte-Carlo link runs, eigen checks.

Subcommands:

* ``outage-analytic``: four-curve outage lineup (joint numeric, haptic
  closed + numeric, video numeric) at the default fair rate targets.
* ``outage-numeric``: angle-grid outage estimator for all three schemes
  with free rate targets.
* ``linksim``: the six BLER/BER reference curves plus the gain report.
* ``eig-check``: eigenvalue fluctuation statistics against the
  covariance model.

Each run writes one CSV per curve with columns
``snr_db_normalized,value,scheme,method`` plus a ``summary.json`` holding
the resolved configuration, its hash, seed, runtimes, thresholds/gains
and warnings. Outage curves use normalized SNR (10*log10(n_t*snr)) on the
x-axis; link curves use the configured per-antenna SNR grid directly.

Configuration comes from defaults, then an optional ``key = value`` text
file (--config), then command-line overrides. The default output
directory is ``$MMCT_OUT_DIR`` or ``./mmct_out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .capacity_outage import RateTargets, outage_curves, outage_thresholds
from .errors import MmctError
from .frame_mapper import MapperConfig
from .mimo_channel import CorrelationModel, eigenvalue_covariance_check
from .phy_link import MCS_TABLE, SchemeId, gain_report, run_reference_schemes

__all__ = ["ExperimentConfig", "run", "main"]


class _ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_angle(text: str) -> float:
    """Angles as plain floats or pi fractions like 'pi/3', '-pi/6', 'pi'."""
    cleaned = text.strip().lower().replace(" ", "")
    if cleaned in ("none", ""):
        return None  # type: ignore[return-value]
    sign = 1.0
    if cleaned.startswith("-"):
        sign, cleaned = -1.0, cleaned[1:]
    if cleaned.startswith("pi"):
        rest = cleaned[2:]
        if not rest:
            return sign * math.pi
        if rest.startswith("/"):
            return sign * math.pi / float(rest[1:])
        raise ValueError(f"bad angle: {text!r}")
    return sign * float(cleaned)


def _parse_optional_float(text: str):
    return None if text.strip().lower() == "none" else float(text)


# name -> (converter, default) per command; config files and CLI flags share names
_COMMON = {
    "seed": (int, 1),
    "threads": (int, 1),
}

_OUTAGE_COMMON = {
    "nr_rate": (float, 12.0),
    "rbs_per_layer": (int, 20),
    "shared_haptic_rbs": (int, 2),
    "layers": (int, 2),
    "tx_antennas": (int, 64),
    "m": (int, 100_000),
    "snr_start_db": (float, 0.0),
    "snr_stop_db": (float, 36.0),
    "snr_step_db": (float, 0.25),
}

_SCHEMAS: dict[str, dict] = {
    "outage-analytic": {**_COMMON, **_OUTAGE_COMMON},
    "outage-numeric": {
        **_COMMON,
        **_OUTAGE_COMMON,
        "haptic_rate": (_parse_optional_float, None),
        "video_rate": (_parse_optional_float, None),
    },
    "linksim": {
        **_COMMON,
        "rbs_per_layer": (int, 20),
        "shared_haptic_rbs": (int, 4),
        "layers": (int, 2),
        "haptic_layers": (int, 1),
        "subcarriers": (int, 12),
        "ofdm_symbols": (int, 12),
        "mcs_index": (int, 25),
        "low_mcs_index": (int, 17),
        "tx_antennas": (int, 8),
        "rx_antennas": (int, 2),
        "rx_angle": (_parse_angle, None),
        "haptic_share": (float, 0.1),
        "trials": (int, 200),
        "snr_start_db": (float, 12.0),
        "snr_stop_db": (float, 72.0),
        "snr_step_db": (float, 4.0),
        "bler_target_haptic": (float, 1e-3),
        "bler_target_video": (float, 1e-1),
        "per_rb_codewords": (_parse_bool, False),
    },
    "eig-check": {
        **_COMMON,
        "tx_antennas": (int, 64),
        "trials": (int, 100_000),
        "thetas": (str, "0,pi/3,pi/2"),
        "power": (float, 1.0),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict
    out_dir: Path

    @property
    def seed(self) -> int:
        return self.params["seed"]


def _read_config_file(path: Path, schema: dict) -> dict:
    if not path.is_file():
        raise _ConfigError("config", f"file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _ConfigError("config", f"{path}:{lineno}: expected key = value")
        key, _, text = line.partition("=")
        key = key.strip()
        if key not in schema:
            raise _ConfigError(key, f"unknown parameter (line {lineno} of {path})")
        conv, _default = schema[key]
        try:
            values[key] = conv(text.strip())
        except ValueError as exc:
            raise _ConfigError(key, str(exc)) from None
    return values


def _resolve_params(args: argparse.Namespace) -> dict:
    schema = _SCHEMAS[args.command]
    params = {name: default for name, (_conv, default) in schema.items()}
    if args.config is not None:
        params.update(_read_config_file(Path(args.config), schema))
    for name, (conv, _default) in schema.items():
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            params[name] = conv(value) if isinstance(value, str) else value
    return params


def _snr_grid(params: dict) -> np.ndarray:
    start, stop, step = params["snr_start_db"], params["snr_stop_db"], params["snr_step_db"]
    if step <= 0:
        raise _ConfigError("snr_step_db", f"must be positive, got {step}")
    grid = np.arange(start, stop + step / 2, step)
    if grid.size == 0:
        raise _ConfigError("snr_grid", "snr_grid must be non-empty")
    return grid


def _config_hash(params: dict) -> str:
    canon = "\n".join(f"{k}={params[k]!r}" for k in sorted(params))
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(value: float) -> str:
    return format(value, ".12g")


def _write_curve_csv(path: Path, snr_db, values, scheme: str, method: str) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["snr_db_normalized", "value", "scheme", "method"])
        for s, v in zip(snr_db, values):
            writer.writerow([_fmt(s), _fmt(v), scheme, method])


def _summary_base(config: ExperimentConfig, outputs: list[str], runtime: float) -> dict:
    return {
        "command": config.command,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in config.params.items()},
        "config_hash": _config_hash(config.params),
        "seed": config.seed,
        "runtime_s": runtime,
        "outputs": outputs,
        "versions": {"mmct": __version__, "numpy": np.__version__},
    }


def _targets_from(params: dict, fair: bool) -> RateTargets:
    if fair or params.get("haptic_rate") is None:
        targets = RateTargets.fair_split(
            nr_rate=params["nr_rate"],
            rbs_per_layer=params["rbs_per_layer"],
            shared_haptic_rbs=params["shared_haptic_rbs"],
            layers=params["layers"],
            tx_antennas=params["tx_antennas"],
        )
        if not fair and params.get("video_rate") is not None:
            raise _ConfigError("video_rate", "requires haptic_rate as well")
        return targets
    video = params["video_rate"] if params.get("video_rate") is not None else params["nr_rate"]
    return RateTargets(
        nr_rate=params["nr_rate"],
        haptic_rate=params["haptic_rate"],
        video_rate=video,
        rbs_per_layer=params["rbs_per_layer"],
        shared_haptic_rbs=params["shared_haptic_rbs"],
        layers=params["layers"],
        tx_antennas=params["tx_antennas"],
    )


def _run_outage(config: ExperimentConfig, numeric_only: bool) -> dict:
    params = config.params
    targets = _targets_from(params, fair=not numeric_only)
    grid = _snr_grid(params)
    curves = outage_curves(targets, grid, params["m"])
    if numeric_only:
        curves = [c for c in curves if c.method == "numeric"]
    outputs = []
    for curve in curves:
        name = f"outage_{curve.scheme.value}_{curve.method}.csv"
        _write_curve_csv(config.out_dir / name, curve.snr_db, curve.p_out, curve.scheme.value, curve.method)
        outputs.append(name)
    summary_extra = {
        "rate_targets": {
            "nr": targets.nr_rate,
            "mmct_h": targets.haptic_rate,
            "mmct_v": targets.video_rate,
        },
        "thresholds_normalized": outage_thresholds(targets),
    }
    return {"outputs": outputs, "extra": summary_extra}


_LINK_CURVE_STREAMS = {
    SchemeId.NR_HAPTIC_ALONE: "haptic",
    SchemeId.NR_VIDEO_ALONE: "video",
    SchemeId.NR_JOINT: "haptic",  # one jointly coded block: both streams share it
    SchemeId.NR_HAPTIC_LOW_MCS: "haptic",
    SchemeId.MMCT_HAPTIC: "haptic",
    SchemeId.MMCT_VIDEO: "video",
}


def _run_linksim(config: ExperimentConfig) -> dict:
    params = config.params
    if params["mcs_index"] not in MCS_TABLE or params["low_mcs_index"] not in MCS_TABLE:
        known = sorted(MCS_TABLE)
        raise _ConfigError("mcs_index", f"unknown MCS index; table has {known}")
    mapper = MapperConfig(
        layers=params["layers"],
        haptic_layers=params["haptic_layers"],
        rbs_per_layer=params["rbs_per_layer"],
        shared_haptic_rbs=params["shared_haptic_rbs"],
        subcarriers=params["subcarriers"],
        ofdm_symbols=params["ofdm_symbols"],
    )
    grid = _snr_grid(params)
    results = run_reference_schemes(
        mapper=mapper,
        mcs=MCS_TABLE[params["mcs_index"]],
        low_mcs=MCS_TABLE[params["low_mcs_index"]],
        snr_grid_db=grid,
        trials_per_point=params["trials"],
        rng_seed=params["seed"],
        threads=params["threads"],
        tx_antennas=params["tx_antennas"],
        rx_antennas=params["rx_antennas"],
        rx_angle=params["rx_angle"],
        haptic_share=params["haptic_share"],
        per_rb_codewords=params["per_rb_codewords"],
    )
    outputs = []
    for scheme, result in results.items():
        stream = _LINK_CURVE_STREAMS[scheme]
        for kind, values in (("bler", result.bler(stream)), ("ber", result.ber(stream))):
            name = f"linksim_{scheme.value}_{kind}_{stream}.csv"
            _write_curve_csv(config.out_dir / name, result.snr_db, values, scheme.value, f"{kind}_{stream}")
            outputs.append(name)
    report = gain_report(
        results,
        bler_target_h=params["bler_target_haptic"],
        bler_target_v=params["bler_target_video"],
    )
    extra = {
        "gains_db": {
            "gain_haptic": report.gain_haptic_db,
            "gain_effective": report.gain_effective_db,
        },
        "crossings_db": {
            "mmct_haptic": report.snr_mmct_haptic_db,
            "mmct_video": report.snr_mmct_video_db,
            "mmct_both": report.snr_mmct_both_db,
            "nr_joint_haptic": report.snr_joint_haptic_db,
            "nr_joint_stringent": report.snr_joint_stringent_db,
        },
        "warnings": list(report.warnings),
    }
    return {"outputs": outputs, "extra": extra}


def _run_eig_check(config: ExperimentConfig) -> dict:
    params = config.params
    thetas = [_parse_angle(t) for t in params["thetas"].split(",") if t.strip()]
    if not thetas:
        raise _ConfigError("thetas", "need at least one angle")
    rows = []
    reports = {}
    for theta in thetas:
        corr = CorrelationModel.from_angle(theta)
        rep = eigenvalue_covariance_check(
            corr, params["tx_antennas"], params["trials"], config.seed, power=params["power"]
        )
        reports[theta] = rep
        for i in range(rep.rx_eigenvalues.size):
            rows.append(
                (theta, i + 1, rep.var_empirical[i], rep.var_predicted[i], rep.ratio[i])
            )
    name = "eig_check.csv"
    with (config.out_dir / name).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "eigen_index", "var_empirical", "var_predicted", "ratio"])
        for theta, idx, emp, pred, ratio in rows:
            writer.writerow([_fmt(theta), idx, _fmt(emp), _fmt(pred), _fmt(ratio)])
    extra = {
        "asymptotic_regime": all(rep.asymptotic_regime for rep in reports.values()),
        "notes": sorted({note for rep in reports.values() for note in rep.notes}),
    }
    return {"outputs": [name], "extra": extra}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    started = time.time()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    if config.command == "outage-analytic":
        payload = _run_outage(config, numeric_only=False)
    elif config.command == "outage-numeric":
        payload = _run_outage(config, numeric_only=True)
    elif config.command == "linksim":
        payload = _run_linksim(config)
    elif config.command == "eig-check":
        payload = _run_eig_check(config)
    else:  # pragma: no cover - argparse restricts choices
        raise _ConfigError("command", f"unknown command {config.command}")
    summary = _summary_base(config, payload["outputs"], time.time() - started)
    summary.update(payload["extra"])
    with (config.out_dir / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmct",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    descriptions = {
        "outage-analytic": (
            "Four-curve outage lineup at the default fair rate targets. The SNR "
            "grid (snr_start_db/stop/step) is in normalized dB, 10*log10(n_t*snr)."
        ),
        "outage-numeric": (
            "Angle-grid outage estimator for all three schemes with free rate "
            "targets. Grid in normalized dB, 10*log10(n_t*snr)."
        ),
        "linksim": (
            "Monte-Carlo BLER/BER of the six reference schemes plus the gain "
            "report. Grid in per-antenna SNR dB (not n_t-normalized)."
        ),
        "eig-check": "Eigenvalue fluctuation statistics against the covariance model.",
    }
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _SCHEMAS.items():
        p = sub.add_parser(command, description=descriptions[command])
        p.add_argument("--config", help="key = value parameter file")
        p.add_argument("--out", help="output directory (default $MMCT_OUT_DIR or ./mmct_out)")
        for name in schema:
            flag = "--" + name.replace("_", "-")
            if name == "m":
                p.add_argument("--M", "--m", dest="m", help="angle-grid size")
            elif name == "trials":
                p.add_argument("--trials", help="Monte-Carlo trials")
            else:
                p.add_argument(flag, dest=name)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        params = _resolve_params(args)
        out_dir = Path(
            args.out
            if args.out is not None
            else os.environ.get("MMCT_OUT_DIR", "mmct_out")
        )
        config = ExperimentConfig(command=args.command, params=params, out_dir=out_dir)
        return run(config)
    except (_ConfigError, MmctError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
