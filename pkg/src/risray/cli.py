"""Command-line entry point.

Subcommands: ``run`` (execute a scenario config, emit CSV + manifest),
``coverage`` (alias of run for grid scenarios), ``paths`` (single-point
path dump) and ``validate`` (built-in oracle suite).

Exit codes are stable API: 0 success, 1 config error, 2 scene error,
3 runtime error, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

import risray
from risray import analysis, channel, em, ris, scenarios
from risray.geo import SceneError, load_scene
from risray.scenarios import ConfigError, ScenarioConfig
from risray.tracer import trace

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SCENE = 2
EXIT_RUNTIME = 3
EXIT_ORACLE = 4

PATH_DUMP_COLUMNS = (
    "path_id",
    "interactions",
    "length_m",
    "aod_az_deg",
    "aod_el_deg",
    "aoa_az_deg",
    "aoa_el_deg",
    "gain_db",
    "phase_rad",
)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(raw: dict, pairs: list[str]) -> dict:
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, value = pair.split("=", 1)
        node = raw
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object")
        node[parts[-1]] = _parse_value(value)
    return raw


def _load_config(args) -> ScenarioConfig:
    ref = args.config
    p = Path(ref)
    if p.exists():
        raw = json.loads(p.read_text())
    else:
        cfg = scenarios.load_config(ref)  # bundled preset name
        raw = cfg.to_dict()
    raw = _apply_overrides(raw, args.set or [])
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    return ScenarioConfig.from_dict(raw)


def _scene_sha256(scene_ref: str) -> str:
    from risray.geo import _resolve_scene_path

    data = Path(str(_resolve_scene_path(scene_ref))).read_bytes()
    return hashlib.sha256(data).hexdigest()


def _write_atomic(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def cmd_run(args) -> int:
    t0 = time.time()
    config = _load_config(args)
    scene_hash = _scene_sha256(config.scene)  # fails before any output
    out_dir = Path(args.out)

    if config.scenario == "C" and config.max_diffractions >= 1:
        # main table is the reflection-only grid; the diffraction-enabled
        # grid goes to a sibling file
        result = scenarios.run_scenario_c(config, diffraction=False)
        diff_res = scenarios.run_scenario_c(config, diffraction=True)
    else:
        result = scenarios.run(config)
        diff_res = None

    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    csv_path = out_dir / "sweep.csv"
    _write_atomic(csv_path, result.to_csv())
    outputs.append(csv_path.name)
    for name, (cols, rows) in result.extra_tables.items():
        extra_path = out_dir / f"{name}.csv"
        lines = [",".join(cols)] + [",".join(scenarios._fmt(v) for v in r) for r in rows]
        _write_atomic(extra_path, "\n".join(lines) + "\n")
        outputs.append(extra_path.name)
    if diff_res is not None:
        diff_path = out_dir / "sweep_diffraction.csv"
        _write_atomic(diff_path, diff_res.to_csv())
        outputs.append(diff_path.name)

    if config.size_sweep_n:
        sizes = scenarios.ris_size_sweep(
            config, config.size_sweep_n, policies=("optimal", "unit", "random"), point_index=0
        )
        sizes_path = out_dir / "sizes.csv"
        _write_atomic(sizes_path, sizes.to_csv())
        outputs.append(sizes_path.name)

    manifest = {
        "tool_version": risray.__version__,
        "config": config.to_dict(),
        "scene_sha256": scene_hash,
        "outputs": outputs,
        "duration_s": round(time.time() - t0, 3),
    }
    _write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=1) + "\n")
    return EXIT_OK


def _angles_deg(v) -> tuple[float, float]:
    az = math.degrees(math.atan2(v[1], v[0]))
    el = math.degrees(math.asin(max(-1.0, min(1.0, v[2]))))
    return az, el


def cmd_paths(args) -> int:
    config = _load_config(args)
    _scene_sha256(config.scene)
    scene = load_scene(config.scene)
    cfg = config.trace_config()

    if args.tx:
        tx = np.array([float(x) for x in args.tx.split(",")])
    else:
        tx = np.array([*config.placement["bs"], config.tx_height_m])
    if args.rx:
        rx = np.array([float(x) for x in args.rx.split(",")])
    else:
        if "ue0" in config.placement:
            base = config.placement["ue0"]
            off = config.sweep_step_m * args.point
            rx = np.array([base[0], base[1] + off, config.ue_height_m])
        elif "ue" in config.placement:
            rx = np.array([*config.placement["ue"], config.ue_height_m])
        else:
            rx = np.array([*config.placement["grid_center"], config.ue_height_m])

    paths = trace(scene, tx, rx, cfg)
    from risray.tracer import filter_paths

    paths = filter_paths(paths, config.path_filter)
    lines = [",".join(PATH_DUMP_COLUMNS)]
    for i, p in enumerate(paths):
        g = em.path_gain(p, scene, config.freq_ghz)
        aod = _angles_deg(p.departure_dir)
        aoa = _angles_deg(p.arrival_dir)
        gain_db = 20 * math.log10(abs(g.amplitude)) if abs(g.amplitude) > 0 else float("-inf")
        lines.append(
            ",".join(
                [
                    str(i),
                    p.signature(scene),
                    f"{p.length:.10g}",
                    f"{aod[0]:.10g}",
                    f"{aod[1]:.10g}",
                    f"{aoa[0]:.10g}",
                    f"{aoa[1]:.10g}",
                    f"{gain_db:.10g}" if math.isfinite(gain_db) else "-inf",
                    f"{np.angle(g.amplitude):.10g}",
                ]
            )
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "paths.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _oracle_friis() -> tuple[float, float]:
    dev = 0.0
    for d in (1.0, 2.0, 8.0, 64.0, 256.0):
        slope = 20 * math.log10(abs(em.free_space_gain(d, 28.0)) / abs(em.free_space_gain(2 * d, 28.0)))
        dev = max(dev, abs(slope - 20 * math.log10(2.0)))
    lam = em.SPEED_OF_LIGHT / 28e9
    pl_1m = -20 * math.log10(abs(em.free_space_gain(1.0, 28.0)))
    dev = max(dev, abs(pl_1m - 20 * math.log10(4 * math.pi / lam)))
    return dev, 0.01


def _oracle_two_ray() -> tuple[float, float]:
    from risray.geo import build_scene, default_materials
    from risray.tracer import TraceConfig, filter_paths

    mats = default_materials()
    scene = build_scene(mats["concrete"], [], materials=mats)
    cfg = TraceConfig(max_reflections=1, angular_resolution=math.radians(2.0))
    dev = 0.0
    for d in (10.0, 50.0, 200.0):
        paths = filter_paths(trace(scene, [0, 0, 5.0], [d, 0, 1.0], cfg), "two_ray")
        h = sum(em.path_gain(p, scene, 28.0).amplitude for p in paths)
        got = 20 * math.log10(abs(h))
        want = analysis.two_ray_power(d, 5.0, 1.0, 28.0, mats["concrete"])
        dev = max(dev, abs(got - want))
    return dev, 0.1


def _oracle_n_squared() -> tuple[float, float]:
    from risray.geo import build_scene, default_materials
    from risray.tracer import TraceConfig

    mats = default_materials()
    scene = build_scene(mats["concrete"], [], materials=mats)
    cfg = TraceConfig(max_reflections=0)
    sizes = (16, 64, 256, 1024)
    powers = []
    for n in sizes:
        panel = ris.square_panel([20.0, 6.0, 5.0], -math.pi / 2, math.radians(-3), n, 28.0)
        rep = channel.evaluate(scene, [0, 0, 5.0], [40.0, 0, 1.0], panel, cfg, freq_ghz=28.0)
        powers.append(abs(rep.h_ris) ** 2)
    slope = analysis.fit_loglog_line(sizes, powers).coefficients[1]
    return abs(slope - 2.0), 0.05


def _oracle_cascade_closed_form() -> tuple[float, float]:
    from risray.geo import build_scene, default_materials
    from risray.tracer import TraceConfig

    mats = default_materials()
    scene = build_scene(mats["concrete"], [], materials=mats)
    cfg = TraceConfig(max_reflections=0)
    panel = ris.square_panel([20.0, 6.0, 5.0], -math.pi / 2, math.radians(-3), 256, 28.0)
    tx = np.array([0, 0, 5.0])
    rx = np.array([40.0, 0, 1.0])
    rep = channel.evaluate(scene, tx, rx, panel, cfg, freq_ghz=28.0)
    d_t = float(np.linalg.norm(panel.center - tx))
    d_r = float(np.linalg.norm(rx - panel.center))
    want = analysis.ris_cascade_closed_form(256, d_t, d_r, 28.0)
    return abs(20 * math.log10(abs(rep.h_ris) / want)), 0.5


ORACLES = {
    "friis": _oracle_friis,
    "two_ray": _oracle_two_ray,
    "n_squared": _oracle_n_squared,
    "cascade_closed_form": _oracle_cascade_closed_form,
}


def cmd_validate(_args) -> int:
    failed = False
    for name, fn in ORACLES.items():
        dev, tol = fn()
        ok = dev <= tol
        failed = failed or not ok
        status = "PASS" if ok else "FAIL"
        print(f"ORACLE {name} {status} deviation={dev:.6g} tolerance={tol:g}")
    return EXIT_ORACLE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risray", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config file or preset name")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
        p.add_argument("--threads", type=int, default=None, help="worker count (0 = all cores)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")

    p_run = sub.add_parser("run", help="run a scenario sweep")
    common(p_run)
    p_cov = sub.add_parser("coverage", help="run a coverage-grid scenario")
    common(p_cov)
    p_paths = sub.add_parser("paths", help="dump propagation paths for one link")
    common(p_paths)
    p_paths.add_argument("--tx", help="override transmitter as x,y,z")
    p_paths.add_argument("--rx", help="override receiver as x,y,z")
    p_paths.add_argument("--point", type=int, default=0, help="sweep index for the receiver")
    sub.add_parser("validate", help="run the built-in oracle suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "coverage": cmd_run,
        "paths": cmd_paths,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_SCENE
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
