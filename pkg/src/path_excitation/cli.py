"""Command-line front end: strict JSON config in, CSV/JSON artifacts out.

Subcommands: field, trajectories, sorkin, verify, packet.  Every run
echoes the fully resolved configuration (all defaults applied) next to
its outputs, so artifacts are self-describing and reruns are
reproducible.  Floating-point values in CSV files carry 17 significant
digits; repeated runs with the same config and seed produce
byte-identical files.

Exit codes: 0 success, 2 invalid config, 3 tolerance failure from
verify or sorkin, 4 runtime error.  Failures print a one-line JSON
object {"error": ..., "message": ...} to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BoundaryLeak,
    DegenerateDensity,
    MismatchedPoint,
    NegativeTime,
    NodalPoint,
    ParseError,
    ValidationError,
)
from .field import GridSpec, SlitMask, field_grid
from .oracle import equivalence_report
from .packet import PhysParams, SlitSpec, eval_packet, sigma_t
from .sorkin import sumrule_report
from .trajectories import ensemble, quantile_initial, streamlines

__all__ = ["RunConfig", "parse_config", "echo_config", "run_subcommand", "main"]

SUBCOMMANDS = ("field", "trajectories", "sorkin", "verify", "packet")
VERIFY_TOL = 1e-10
SORKIN_TOL = 1e-12
SORKIN_FLOOR = 1e-6  # the order-2 term must exceed this, normalized
MAX_STREAMLINES = 200
MAX_STREAMLINE_ROWS = 201

_TOP_KEYS = {"hbar", "mass", "slits", "mask", "grid", "trajectories", "node_floor"}
_SLIT_KEYS = {"center", "sigma0", "drift", "weight", "phase0"}
_GRID_KEYS = {"xmin", "xmax", "n", "t"}
_TRAJ_KEYS = {"t0", "t1", "dt", "n", "bins", "seed"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration; every field is concrete."""

    params: PhysParams
    slits: tuple[SlitSpec, ...]
    mask: SlitMask
    grid: GridSpec
    t0: float
    t1: float
    dt: float
    n: int
    bins: int
    seed: int
    node_floor: float


def _number(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"{where}: expected a number, got {raw!r}")
    return float(raw)


def _integer(raw, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ParseError(f"{where}: expected an integer, got {raw!r}")
    return raw


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    for key in sorted(set(obj) - allowed):
        raise ParseError(f"{where}: unknown key '{key}'")


def parse_config(text: str) -> RunConfig:
    """Parse and validate strict JSON configuration text.

    Structural problems (bad JSON, unknown or mistyped keys) raise
    ParseError; value problems raise ValidationError naming the
    violated invariant.  Omitted keys take documented defaults.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise ParseError("top-level value must be an object")
    _check_keys(raw, _TOP_KEYS, "config")

    try:
        params = PhysParams(
            hbar=_number(raw.get("hbar", 1.0), "hbar"),
            mass=_number(raw.get("mass", 1.0), "mass"),
        )
    except ParseError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    slits_raw = raw.get("slits", [{"center": -3.0}, {"center": 3.0}])
    if not isinstance(slits_raw, list) or not slits_raw:
        raise ParseError("slits: expected a non-empty list of objects")
    slits = []
    for i, item in enumerate(slits_raw):
        where = f"slits[{i}]"
        if not isinstance(item, dict):
            raise ParseError(f"{where}: expected an object")
        _check_keys(item, _SLIT_KEYS, where)
        if "center" not in item:
            raise ParseError(f"{where}: missing key 'center'")
        try:
            slits.append(
                SlitSpec(
                    center=_number(item["center"], f"{where}.center"),
                    sigma0=_number(item.get("sigma0", 1.0), f"{where}.sigma0"),
                    drift=_number(item.get("drift", 0.0), f"{where}.drift"),
                    weight=_number(item.get("weight", 1.0), f"{where}.weight"),
                    phase0=_number(item.get("phase0", 0.0), f"{where}.phase0"),
                )
            )
        except ParseError:
            raise
        except ValueError as exc:
            raise ValidationError(f"{where}: {exc}") from None

    mask_raw = raw.get("mask", list(range(len(slits))))
    if not isinstance(mask_raw, list):
        raise ParseError("mask: expected a list of slit indices")
    indices = [_integer(v, f"mask[{k}]") for k, v in enumerate(mask_raw)]
    if len(set(indices)) != len(indices):
        raise ParseError("mask: duplicate index")
    for v in indices:
        if not 0 <= v < len(slits):
            raise ValidationError(f"mask index {v} out of range for {len(slits)} slits")
    mask = SlitMask(indices)

    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ParseError("grid: expected an object")
    _check_keys(grid_raw, _GRID_KEYS, "grid")
    try:
        grid = GridSpec(
            x_min=_number(grid_raw.get("xmin", -15.0), "grid.xmin"),
            x_max=_number(grid_raw.get("xmax", 15.0), "grid.xmax"),
            n_points=_integer(grid_raw.get("n", 2001), "grid.n"),
            t=_number(grid_raw.get("t", 2.0), "grid.t"),
        )
    except ParseError:
        raise
    except (ValueError, NegativeTime) as exc:
        raise ValidationError(f"grid: {exc}") from None

    traj_raw = raw.get("trajectories", {})
    if not isinstance(traj_raw, dict):
        raise ParseError("trajectories: expected an object")
    _check_keys(traj_raw, _TRAJ_KEYS, "trajectories")
    t0 = _number(traj_raw.get("t0", 1e-3), "trajectories.t0")
    t1 = _number(traj_raw.get("t1", grid.t), "trajectories.t1")
    if not (t1 > t0 >= 0.0):
        raise ValidationError("t1 > t0 >= 0 violated")
    dt = traj_raw.get("dt")
    dt = (t1 - t0) / 2000.0 if dt is None else _number(dt, "trajectories.dt")
    if not dt > 0.0:
        raise ValidationError("dt > 0 violated")
    n = _integer(traj_raw.get("n", 10000), "trajectories.n")
    if n < 1:
        raise ValidationError("n >= 1 violated")
    bins = _integer(traj_raw.get("bins", 100), "trajectories.bins")
    if bins < 1:
        raise ValidationError("bins >= 1 violated")
    seed = _integer(traj_raw.get("seed", 0), "trajectories.seed")

    node_floor = _number(raw.get("node_floor", 1e-12), "node_floor")
    if node_floor < 0.0:
        raise ValidationError("node_floor >= 0 violated")

    return RunConfig(
        params=params,
        slits=tuple(slits),
        mask=mask,
        grid=grid,
        t0=t0,
        t1=t1,
        dt=dt,
        n=n,
        bins=bins,
        seed=seed,
        node_floor=node_floor,
    )


def echo_config(cfg: RunConfig) -> str:
    """Canonical JSON for cfg with every default applied explicitly.

    parse_config(echo_config(cfg)) reconstructs an equal RunConfig.
    """
    obj = {
        "hbar": cfg.params.hbar,
        "mass": cfg.params.mass,
        "slits": [
            {
                "center": s.center,
                "sigma0": s.sigma0,
                "drift": s.drift,
                "weight": s.weight,
                "phase0": s.phase0,
            }
            for s in cfg.slits
        ],
        "mask": list(cfg.mask.indices()),
        "grid": {
            "xmin": cfg.grid.x_min,
            "xmax": cfg.grid.x_max,
            "n": cfg.grid.n_points,
            "t": cfg.grid.t,
        },
        "trajectories": {
            "t0": cfg.t0,
            "t1": cfg.t1,
            "dt": cfg.dt,
            "n": cfg.n,
            "bins": cfg.bins,
            "seed": cfg.seed,
        },
        "node_floor": cfg.node_floor,
    }
    return json.dumps(obj, indent=2) + "\n"


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _field_csv(cfg: RunConfig) -> str:
    rows = field_grid(cfg.params, list(cfg.slits), cfg.mask, cfg.grid, cfg.node_floor)
    open_idx = cfg.mask.indices()
    xs = cfg.grid.points()
    amps = [
        np.asarray(eval_packet(cfg.params, cfg.slits[i], xs, cfg.grid.t).amplitude)
        for i in open_idx
    ]
    header = "x,P_tot,J_tot,v_tot,nodal" + "".join(
        f",R_{k + 1}" for k in range(len(open_idx))
    )
    lines = [header]
    for k, (x, s) in enumerate(rows):
        cells = [_fmt(x), _fmt(s.p_tot), _fmt(s.j_tot), _fmt(s.v_tot), str(int(s.nodal))]
        cells += [_fmt(a[k]) for a in amps]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _histogram_csv(edges: np.ndarray, counts: np.ndarray) -> str:
    total = int(counts.sum())
    lines = ["bin_left,bin_right,count,density"]
    for i in range(counts.size):
        width = edges[i + 1] - edges[i]
        density = counts[i] / (total * width) if total > 0 and width > 0 else 0.0
        lines.append(
            f"{_fmt(edges[i])},{_fmt(edges[i + 1])},{int(counts[i])},{_fmt(density)}"
        )
    return "\n".join(lines) + "\n"


def _streamline_csv(cfg: RunConfig) -> str:
    n_lines = min(cfg.n, MAX_STREAMLINES)
    x0s = quantile_initial(cfg.params, list(cfg.slits), cfg.mask, cfg.t0, n_lines)
    times, paths, abort_steps = streamlines(
        cfg.params, list(cfg.slits), cfg.mask, x0s, cfg.t0, cfg.t1, cfg.dt,
        cfg.node_floor,
    )
    keep = np.unique(
        np.linspace(0, times.size - 1, min(times.size, MAX_STREAMLINE_ROWS)).astype(int)
    )
    lines = ["traj_id,t,x"]
    for i in range(n_lines):
        last = abort_steps[i] if abort_steps[i] >= 0 else times.size - 1
        for k in keep:
            if k > last:
                break
            lines.append(f"{i},{_fmt(times[k])},{_fmt(paths[k, i])}")
    return "\n".join(lines) + "\n"


def _run_field(cfg: RunConfig, out_dir: str) -> int:
    _write(os.path.join(out_dir, "field.csv"), _field_csv(cfg))
    return 0


def _run_trajectories(cfg: RunConfig, out_dir: str) -> int:
    result = ensemble(
        cfg.params, list(cfg.slits), cfg.mask, cfg.t0, cfg.t1, cfg.n, cfg.dt,
        cfg.bins, cfg.seed, cfg.node_floor,
    )
    _write(
        os.path.join(out_dir, "histogram.csv"),
        _histogram_csv(result.bin_edges, result.counts),
    )
    _write(os.path.join(out_dir, "trajectories.csv"), _streamline_csv(cfg))
    return 0


def _run_sorkin(cfg: RunConfig, out_dir: str) -> int:
    if len(cfg.slits) < 2:
        raise ValidationError("sorkin requires at least two slits")
    reports = sumrule_report(cfg.params, list(cfg.slits), cfg.grid, len(cfg.slits))
    high_ok = all(r.normalized_max <= SORKIN_TOL for r in reports if r.order >= 3)
    violation = reports[0].normalized_max > SORKIN_FLOOR
    passed = high_ok and violation
    payload = {
        "scale": reports[0].scale,
        "first_order_violation": violation,
        "tolerance": SORKIN_TOL,
        "passed": passed,
        "orders": [
            {
                "order": r.order,
                "max_abs": r.max_abs,
                "normalized_max": r.normalized_max,
                "values": [float(v) for v in r.values],
            }
            for r in reports
        ],
    }
    _write(os.path.join(out_dir, "sorkin.json"), json.dumps(payload, indent=2) + "\n")
    return 0 if passed else 3


def _run_verify(cfg: RunConfig, out_dir: str) -> int:
    report = equivalence_report(
        cfg.params, list(cfg.slits), cfg.mask, cfg.grid, cfg.node_floor
    )
    ok_p = report.max_abs_dev_p <= VERIFY_TOL * report.peak_p or (
        report.peak_p == 0.0 and report.max_abs_dev_p == 0.0
    )
    ok_j = report.max_abs_dev_j <= VERIFY_TOL * report.peak_j or (
        report.peak_j == 0.0 and report.max_abs_dev_j == 0.0
    )
    ok_v = report.max_rel_dev_v <= VERIFY_TOL
    passed = ok_p and ok_j and ok_v
    payload = {
        "max_abs_dev_p": report.max_abs_dev_p,
        "peak_p": report.peak_p,
        "max_abs_dev_j": report.max_abs_dev_j,
        "peak_j": report.peak_j,
        "max_rel_dev_v": report.max_rel_dev_v,
        "n_nodal": report.n_nodal,
        "tolerance": VERIFY_TOL,
        "passed": passed,
        "grid": {
            "xmin": report.grid.x_min,
            "xmax": report.grid.x_max,
            "n": report.grid.n_points,
            "t": report.grid.t,
        },
    }
    _write(os.path.join(out_dir, "verify.json"), json.dumps(payload, indent=2) + "\n")
    return 0 if passed else 3


def _run_packet(cfg: RunConfig, out_dir: str) -> int:
    open_idx = cfg.mask.indices()
    slit = cfg.slits[open_idx[0]] if open_idx else cfg.slits[0]
    ts = np.linspace(0.0, cfg.grid.t, 201)
    lines = ["t,sigma,variance"]
    for t in ts:
        s = sigma_t(cfg.params, slit, float(t))
        lines.append(f"{_fmt(t)},{_fmt(s)},{_fmt(s * s)}")
    _write(os.path.join(out_dir, "packet.csv"), "\n".join(lines) + "\n")
    return 0


def run_subcommand(name: str, config: RunConfig, out_dir: str = ".") -> int:
    """Run one subcommand, writing artifacts into out_dir.

    Returns the process exit status; tolerance failures from verify and
    sorkin return 3 after still writing their reports.
    """
    if name not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand '{name}'")
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "config_echo.json"), echo_config(config))
    runner = {
        "field": _run_field,
        "trajectories": _run_trajectories,
        "sorkin": _run_sorkin,
        "verify": _run_verify,
        "packet": _run_packet,
    }[name]
    return runner(config, out_dir)


def _emit_error(exc: BaseException) -> None:
    print(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}),
        file=sys.stderr,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="path-excitation",
        description="n-slit interference fields, trajectories, and sum-rule checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "field": "evaluate P_tot, J_tot, v_tot on the grid and write field.csv",
        "trajectories": "integrate an ensemble; write trajectories.csv and histogram.csv",
        "sorkin": "write sorkin.json with the interference hierarchy",
        "verify": "compare field against the amplitude oracle; write verify.json",
        "packet": "write packet.csv with the dispersion law of one packet",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", default=None, help="JSON config file (defaults apply when omitted)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        if args.config is None:
            text = "{}"
        else:
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ParseError(f"cannot read config file: {exc}") from None
        cfg = parse_config(text)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return run_subcommand(args.command, cfg, args.out_dir)
    except (ParseError, ValidationError) as exc:
        _emit_error(exc)
        return 2
    except (
        BoundaryLeak,
        DegenerateDensity,
        MismatchedPoint,
        NegativeTime,
        NodalPoint,
    ) as exc:
        _emit_error(exc)
        return 4
    except Exception as exc:  # truly unexpected; still machine readable
        _emit_error(exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
