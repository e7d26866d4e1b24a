"""Command-line front end: ``duplex-rate <command> [flags]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .gaussian import InvalidStateError
from .io import canonical, dumps, region_to_csv, region_to_json
from .transducer import NumericalError

ENV_THREADS = "DUPLEX_RATE_THREADS"


class ConfigError(ValueError):
    """Invalid job configuration; ``line`` points into the config file if known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


# --- argument parsing -------------------------------------------------------

def _kappa_e(text: str):
    if text == "optimal":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'optimal', got {text!r}") from None


# command -> {option dest: (type, default)}; flags are the dests with dashes
OPTIONS = {
    "region": {
        "T": (float, 0.9), "T12": (float, None), "R1": (float, 0.0), "R2": (float, 0.0),
        "theta": (float, 0.0), "n_th": (float, 0.0), "grid_n": (int, 121),
        "encoding": (str, "thermal"),
    },
    "device-region": {
        "g": (float, 5.0), "kappa_e": (_kappa_e, "optimal"), "kappa_i": (float, 1.0),
        "n_th": (float, 0.0), "directions": (int, 9), "exact_limit": (bool, False),
    },
    "band": {
        "g": (float, 5.0), "kappa_e": (_kappa_e, 9.0), "kappa_i": (float, 1.0),
        "n_th": (float, 0.0), "delta_min": (float, -10.0), "delta_max": (float, 10.0),
        "delta_n": (int, 41), "grid_n": (int, 61),
    },
    "fock": {"T": (float, 0.9), "n_p": (int, 101)},
    "check": {},
}
COMMON = ("output", "threads")
ENCODINGS = ("thermal", "locc", "gaussian", "fock")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="duplex-rate", description="Duplex transduction rate regions.")
    p.add_argument("--version", action="version", version=f"duplex-rate {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "region": "rate region of a fixed effective channel",
        "device-region": "rate region of a two-mode device over encodings and detunings",
        "band": "advantage window and frequency-integrated region over a detuning grid",
        "fock": "rate region of {|0>, |1>} encodings on a lossless beam splitter",
        "check": "run the invariant suite",
    }
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd, help=helps[cmd])
        for dest, (typ, default) in opts.items():
            flag = "--" + dest.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=dest, action="store_true", default=None,
                                help=f"(default {default})")
            elif dest == "encoding":
                sp.add_argument(flag, dest=dest, choices=ENCODINGS, default=None,
                                help=f"(default {default})")
            else:
                sp.add_argument(flag, dest=dest, type=typ, default=None, help=f"(default {default})")
        sp.add_argument("--config", type=Path, help="JSON file with any of the flags above")
        sp.add_argument("--output", type=Path, help="directory for the artifacts")
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker processes (also {ENV_THREADS}; default 1)")
    return p


def _line_of(text: str, key: str) -> int | None:
    needle = json.dumps(key)
    for k, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return k
    return None


def load_config(path: Path, command: str) -> dict:
    """Read a JSON config; unknown keys are rejected with their line number."""
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object", 1)
    allowed = set(OPTIONS[command]) | set(COMMON) | {"command", "device"}
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for command {command!r}", _line_of(text, key))
    if "command" in obj and obj["command"] != command:
        raise ConfigError(f"config is for command {obj['command']!r}, not {command!r}",
                          _line_of(text, "command"))
    out = {k: v for k, v in obj.items() if k not in ("command", "device")}
    if "device" in obj:
        dev = obj["device"]
        if command not in ("device-region", "band") or not isinstance(dev, dict):
            raise ConfigError("'device' applies to device-region and band only",
                              _line_of(text, "device"))
        for key, val in dev.items():
            if key not in ("g", "kappa_e", "kappa_i"):
                raise ConfigError(f"unknown device key {key!r}", _line_of(text, key))
            out.setdefault(key, val)
    for key, val in out.items():
        if key in OPTIONS[command]:
            typ = OPTIONS[command][key][0]
            try:
                out[key] = val if typ in (bool, str) else typ(val)
            except (TypeError, ValueError, argparse.ArgumentTypeError):
                raise ConfigError(f"bad value for {key!r}: {val!r}", _line_of(text, key)) from None
            if typ is bool and not isinstance(val, bool):
                raise ConfigError(f"{key!r} must be true or false", _line_of(text, key))
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, environment and flags (flags win)."""
    cmd = args.command
    cfg = {k: d for k, (_, d) in OPTIONS[cmd].items()}
    cfg["threads"] = 1
    cfg["output"] = None
    if args.config is not None:
        cfg.update(load_config(args.config, cmd))
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            cfg["threads"] = int(env)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
    for k in list(OPTIONS[cmd]) + list(COMMON):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["output"] is not None:
        cfg["output"] = str(cfg["output"])
    validate(cmd, cfg)
    return cfg


def validate(cmd: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(isinstance(cfg["threads"], int) and cfg["threads"] >= 1, "threads must be >= 1")
    for k, v in cfg.items():
        if isinstance(v, float):
            need(math.isfinite(v), f"{k} must be finite")
    if cmd == "region":
        need(cfg["encoding"] in ENCODINGS, f"encoding must be one of {ENCODINGS}")
        need(cfg["grid_n"] >= 2, "grid_n must be >= 2")
        T12 = cfg["T"] if cfg["T12"] is None else cfg["T12"]
        for k, v in (("T", cfg["T"]), ("T12", T12), ("R1", cfg["R1"]), ("R2", cfg["R2"])):
            need(0 <= v <= 1, f"{k} must lie in [0, 1]")
        need(cfg["T"] + cfg["R1"] <= 1 + 1e-12 and T12 + cfg["R2"] <= 1 + 1e-12,
             "T + R must not exceed 1")
        need(cfg["n_th"] >= 0, "n_th must be >= 0")
        if cfg["encoding"] == "fock":
            need(cfg["n_th"] == 0 and cfg["T12"] is None,
                 "fock encodings use a lossless beam splitter: only T applies")
            need(0 < cfg["T"] <= 1, "T must lie in (0, 1]")
    if cmd in ("device-region", "band"):
        need(cfg["g"] >= 0 and cfg["kappa_i"] > 0, "need g >= 0 and kappa_i > 0")
        ke = cfg["kappa_e"]
        need(ke == "optimal" or (isinstance(ke, float) and ke > 0),
             "kappa_e must be positive or 'optimal'")
        need(cfg["n_th"] >= 0, "n_th must be >= 0")
    if cmd == "device-region":
        need(cfg["directions"] >= 1, "directions must be >= 1")
    if cmd == "band":
        need(cfg["delta_n"] >= 1, "delta grid must be non-empty")
        need(cfg["delta_n"] == 1 or cfg["delta_max"] > cfg["delta_min"],
             "delta_max must exceed delta_min")
        need(cfg["grid_n"] >= 2, "grid_n must be >= 2")
    if cmd == "fock":
        need(0 < cfg["T"] <= 1, "T must lie in (0, 1]")
        need(cfg["n_p"] >= 2, "n_p must be >= 2")


def _kappa_value(cfg: dict) -> float:
    ke = cfg["kappa_e"]
    return math.sqrt(4 * cfg["g"] ** 2 + cfg["kappa_i"] ** 2) if ke == "optimal" else ke


# --- commands ---------------------------------------------------------------

def _coverage(region) -> dict:
    """Fraction of outer-boundary length carried by each protocol label."""
    b = region.boundary
    tot, out = 0.0, {}
    for u, v in zip(b, b[1:]):
        L = math.hypot(v.I1 - u.I1, v.I2 - u.I2)
        tot += L
        out[u.segment] = out.get(u.segment, 0.0) + L
    return {k: v / tot for k, v in sorted(out.items())} if tot > 0 else {}


def _region_summary(region, imax: float | None = None) -> dict:
    out = {
        "max_sum": region.max_sum,
        "boundary_labels": sorted(region.boundary_labels()),
        "protocol_coverage": _coverage(region),
        "n_boundary": len(region.boundary),
    }
    if imax is not None:
        out["Imax"] = imax
        out["advantage"] = bool(region.max_sum > imax + 1e-9)
    return out


def cmd_region(cfg: dict, pool_map):
    from .rates import pure_loss_capacity
    from .region import gaussian_region, thermal_region
    from .transducer import EffectiveChannel

    if cfg["encoding"] == "fock":
        from .fock import fock_rate_region

        region, s = fock_rate_region(cfg["T"])
        return region, dict(_region_summary(region, s["max_axis"]), **s)
    T12 = cfg["T"] if cfg["T12"] is None else cfg["T12"]
    ch = EffectiveChannel(T12=T12, T21=cfg["T"], R1=cfg["R1"], R2=cfg["R2"],
                          theta=cfg["theta"], n_th=cfg["n_th"])
    if cfg["encoding"] == "gaussian":
        region = gaussian_region(ch)
    else:
        region = thermal_region(ch, n=cfg["grid_n"], reverse=cfg["encoding"] == "locc")
    if cfg["encoding"] == "locc":
        imax = -math.log2(1 - max(cfg["T"], T12)) if max(cfg["T"], T12) < 1 else math.inf
    else:
        imax = float(pure_loss_capacity(max(cfg["T"], T12)))
    return region, _region_summary(region, imax if cfg["n_th"] == 0 else None)


def cmd_device_region(cfg: dict, pool_map):
    from .rates import pure_loss_capacity
    from .region import device_region
    from .transducer import max_transmission_detunings

    ke = _kappa_value(cfg)
    region = device_region(cfg["g"], ke, cfg["kappa_i"], cfg["n_th"], directions=cfg["directions"],
                           exact_limit=cfg["exact_limit"])
    _, T = max_transmission_detunings(cfg["g"], ke, cfg["kappa_i"])
    s = _region_summary(region, float(pure_loss_capacity(T)) if cfg["n_th"] == 0 else None)
    s["kappa_e"] = ke
    return region, s


def _hull_region(C, label):
    from .region import BoundaryVertex, RateRegion, _pareto_chain

    V = C.vertices
    chain = _pareto_chain(V)
    b = [BoundaryVertex(float(V[i, 0]), float(V[i, 1]), label) for i in chain]
    for v in b[:-1]:
        v.segment = label
    return RateRegion(V.copy(), b, C)


def cmd_band(cfg: dict, pool_map):
    from .bandwidth import FrequencyGrid, advantage_window, band_region, time_shared_unidirectional
    from .region import TIME_SHARING

    ke = _kappa_value(cfg)
    grid = FrequencyGrid(np.linspace(cfg["delta_min"], cfg["delta_max"], cfg["delta_n"]))
    summ = advantage_window(cfg["g"], ke, cfg["kappa_i"], grid, cfg["n_th"], n=cfg["grid_n"],
                            map_fn=pool_map)
    total = band_region(summ, grid.spacing)
    tri = time_shared_unidirectional(summ.imax, grid.spacing)
    region = _hull_region(total, TIME_SHARING)
    s = {
        "kappa_e": ke,
        "intervals": [list(iv) for iv in summ.intervals],
        "integrated_area": total.area,
        "unidirectional_area": tri.area,
        "integrated_max_sum": region.max_sum,
        "unidirectional_max_sum": float(np.sum(summ.imax) * grid.spacing),
        "spacing": grid.spacing,
    }
    return region, s, summ


def cmd_fock(cfg: dict, pool_map):
    from .fock import fock_rate_region

    region, s = fock_rate_region(cfg["T"], n_p=cfg["n_p"])
    return region, dict(_region_summary(region, s["max_axis"]), **s)


# --- driver -----------------------------------------------------------------

def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text)


def config_hash(cmd: str, cfg: dict) -> str:
    key = {k: v for k, v in cfg.items() if k not in ("output", "threads")}
    blob = dumps({"command": cmd, "config": key})
    return hashlib.sha256(blob.encode()).hexdigest()


def run(cmd: str, cfg: dict, echo=print) -> int:
    from .svg import render_band_svg, render_region_svg

    out = Path(cfg["output"]) if cfg["output"] else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as e:
            raise ConfigError(f"output directory {out} is not writable: {e.strerror}") from None

    start = time.perf_counter()
    threads = cfg["threads"]
    summ = None
    if threads > 1:
        pool = ProcessPoolExecutor(max_workers=threads)
        pool_map = pool.map
    else:
        pool, pool_map = None, map
    try:
        if cmd == "region":
            region, summary = cmd_region(cfg, pool_map)
        elif cmd == "device-region":
            region, summary = cmd_device_region(cfg, pool_map)
        elif cmd == "band":
            region, summary, summ = cmd_band(cfg, pool_map)
        else:
            region, summary = cmd_fock(cfg, pool_map)
    finally:
        if pool is not None:
            pool.shutdown()
    wall = time.perf_counter() - start

    manifest = {
        "command": cmd,
        "config": {k: v for k, v in cfg.items() if k != "output"},
        "config_hash": config_hash(cmd, cfg),
        "version": __version__,
        "wall_time_s": wall,
        "boundary_labels": sorted(region.boundary_labels()),
        "summary": summary,
    }
    if out is not None:
        _write(out, "region.json", dumps(region_to_json(region)))
        _write(out, "region.csv", region_to_csv(region))
        _write(out, "region.svg", render_region_svg(region_to_json(region), title=cmd))
        if summ is not None:
            _write(out, "band.json", dumps(summ.to_json()))
            _write(out, "band.svg", render_band_svg(canonical(summ.to_json())))
        _write(out, "manifest.json", dumps(manifest))
    echo(dumps(summary).rstrip())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check":
        from .checks import run_checks

        return 0 if run_checks() else 1
    try:
        cfg = resolve(args)
        return run(args.command, cfg)
    except ConfigError as e:
        where = f"{args.config}:{e.line}: " if e.line is not None and args.config else ""
        print(f"duplex-rate: error: {where}{e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"duplex-rate: numerical failure: {e} at {json.dumps(canonical(e.point))}",
              file=sys.stderr)
        return 3
    except (InvalidStateError, FloatingPointError, np.linalg.LinAlgError) as e:
        point = {k: v for k, v in cfg.items() if k not in ("output", "threads")}
        print(f"duplex-rate: numerical failure: {e} at {json.dumps(canonical(point))}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
