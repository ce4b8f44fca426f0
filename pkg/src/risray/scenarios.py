"""Scenario presets and parameter sweeps.

Three major placements: A (UE and RIS translated together away from the
base station), B (RIS swept between fixed endpoints, plus a variant that
sweeps the UE instead) and C (UE confined to a rectangular coverage grid
in the shadow of a corner building).  The free-space and two-ray variants
of A/B reuse the same placements on an open scene with the reflection
budget and path filters adjusted.

Sweep points are independent; evaluation may be spread over worker
processes without changing a single output bit (random draws are seeded
per point, results are assembled in index order).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import numpy as np

from risray import channel, em, ris
from risray.geo import load_scene
from risray.tracer import TraceConfig, canonical_sort, trace_many
from risray.tracer.diffraction import diffraction_paths

SCENARIOS = ("A", "B", "B-variant-UE", "C", "free-space-A", "free-space-B", "two-ray-A")

SWEEP_COLUMNS = (
    "index",
    "coord_m",
    "p_los_dbm",
    "p_ris_dbm",
    "p_total_dbm",
    "n_paths_los",
    "n_paths_t",
    "n_paths_r",
)
GRID_COLUMNS = (
    "index",
    "x_m",
    "y_m",
    "p_los_dbm",
    "p_ris_dbm",
    "p_total_dbm",
    "n_paths_los",
    "n_paths_t",
    "n_paths_r",
)


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass
class ScenarioConfig:
    """Resolved run configuration; defaults follow the standard setup."""

    scenario: str = "A"
    scene: str = "suburb-28ghz"
    freq_ghz: float = 28.0
    ptx_dbm: float = 30.0
    tx_height_m: float = 5.0
    ue_height_m: float = 1.0
    ris_height_m: float = 5.0
    ris_elevation_deg: float = -3.0
    ris_arrangement: str = "square"
    n_elements: int = 1024
    anchor_lat_deg: float = 3.07351
    anchor_lon_deg: float = 101.58633
    policy: str = "optimal"
    seed: int = 0
    path_filter: str = "all"
    max_reflections: int = 5
    max_diffractions: int = 0
    angular_resolution_deg: float = 1.0
    dedup_tolerance_m: float = 1e-3
    sweep_step_m: float = 0.278
    sweep_count: int = 39
    grid_nx: int = 41
    grid_ny: int = 41
    grid_spacing_wavelengths: float = 2.5
    threads: int = 1
    placement: dict = field(default_factory=dict)
    size_sweep_n: list = field(default_factory=list)  # extra sizes table when set
    preset_version: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.policy not in ("optimal", "unit", "random"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.sweep_count < 1:
            raise ConfigError("sweep_count must be >= 1")
        if self.scenario == "C" and self.n_elements == 1024 and "n_elements" not in self.placement:
            # Scenario C default panel is larger (40 x 40).
            self.n_elements = 1600

    def trace_config(self) -> TraceConfig:
        return TraceConfig(
            max_reflections=self.max_reflections,
            max_diffractions=self.max_diffractions,
            angular_resolution=math.radians(self.angular_resolution_deg),
            dedup_tolerance=self.dedup_tolerance_m,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def table1_defaults() -> dict:
    """The parameter set every preset inherits unless overridden."""
    c = ScenarioConfig()
    return {
        "freq_ghz": c.freq_ghz,
        "ptx_dbm": c.ptx_dbm,
        "tx_height_m": c.tx_height_m,
        "ue_height_m": c.ue_height_m,
        "ris_height_m": c.ris_height_m,
        "ris_elevation_deg": c.ris_elevation_deg,
        "ris_arrangement": c.ris_arrangement,
        "n_elements": c.n_elements,
        "anchor_lat_deg": c.anchor_lat_deg,
        "anchor_lon_deg": c.anchor_lon_deg,
    }


def preset_names() -> list[str]:
    root = resources.files("risray.data").joinpath("presets")
    return sorted(f.name[: -len(".json")] for f in root.iterdir() if f.name.endswith(".json"))


def load_config(ref) -> ScenarioConfig:
    """Config from a JSON file path or a bundled preset name."""
    if isinstance(ref, dict):
        return ScenarioConfig.from_dict(ref)
    p = Path(ref)
    if p.exists():
        text = p.read_text()
    else:
        builtin = resources.files("risray.data").joinpath(f"presets/{ref}.json")
        if not builtin.is_file():
            raise ConfigError(f"config not found: {ref}")
        text = builtin.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return ScenarioConfig.from_dict(raw)


@dataclass
class SweepResult:
    """Ordered sweep records plus the resolved configuration."""

    columns: tuple[str, ...]
    rows: list[tuple]
    config: dict
    extra_tables: dict = field(default_factory=dict)  # name -> (columns, rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "-inf" if v < 0 else "inf"
        return f"{v:.10g}"
    return str(v)


def _panel_for(config: ScenarioConfig, center_xy, azimuth_deg: float) -> ris.RisPanel:
    if config.ris_arrangement != "square":
        raise ConfigError("only the square arrangement is supported")
    return ris.square_panel(
        [center_xy[0], center_xy[1], config.ris_height_m],
        math.radians(azimuth_deg),
        math.radians(config.ris_elevation_deg),
        config.n_elements,
        config.freq_ghz,
    )


def _point_seed(config: ScenarioConfig, index: int):
    return np.random.SeedSequence([config.seed, index])


# ---------------------------------------------------------------------------
# Per-point evaluation jobs (module level so worker processes can unpickle).

def _eval_sweep_point(args):
    (scene, config_raw, index, ue, ris_center, ris_az, los_paths, tx_ris_paths) = args
    config = ScenarioConfig.from_dict(config_raw)
    cfg = config.trace_config()
    tx = np.array([*config.placement["bs"], config.tx_height_m])
    panel = _panel_for(config, ris_center, ris_az) if ris_center is not None else None
    rep = channel.evaluate(
        scene,
        tx,
        np.asarray(ue),
        panel,
        cfg,
        policy=config.policy,
        freq_ghz=config.freq_ghz,
        ptx_dbm=config.ptx_dbm,
        seed=_point_seed(config, index),
        path_filter=config.path_filter,
        los_paths=los_paths,
        tx_panel_paths=tx_ris_paths,
    )
    return index, rep


def _eval_c_point(args):
    (scene, config_raw, index, pt, refl_paths, diff_on, panel_args, ris_grid_paths, ht_ref, coeffs) = args
    config = ScenarioConfig.from_dict(config_raw)
    cfg = config.trace_config()
    tx = np.array([*config.placement["bs"], config.tx_height_m])
    los_paths = list(refl_paths)
    if diff_on:
        dcfg = TraceConfig(
            max_reflections=cfg.max_reflections,
            max_diffractions=1,
            angular_resolution=cfg.angular_resolution,
            dedup_tolerance=cfg.dedup_tolerance,
        )
        los_paths = canonical_sort(los_paths + diffraction_paths(scene, tx, np.asarray(pt), dcfg))
    h_los = complex(sum(em.path_gain(p, scene, config.freq_ghz).amplitude for p in los_paths))

    panel = _panel_for(config, panel_args[0], panel_args[1])
    hr = ris.segment_channel(panel, ris_grid_paths, scene, config.freq_ghz, panel_at="src")
    h_ris = ris.cascade(ht_ref, hr, coeffs)
    h_total = h_los + h_ris
    rep = channel.ChannelReport(
        h_los=h_los,
        h_ris=h_ris,
        h_total=h_total,
        p_los_dbm=channel.received_power_dbm(h_los, config.ptx_dbm),
        p_ris_dbm=channel.received_power_dbm(h_ris, config.ptx_dbm),
        p_total_dbm=channel.received_power_dbm(h_total, config.ptx_dbm),
        n_paths_los=len(los_paths),
        n_paths_t=ht_ref.n_paths,
        n_paths_r=hr.n_paths,
    )
    return index, rep


def _run_jobs(jobs, worker, threads: int):
    if threads <= 1:
        results = [worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, jobs, chunksize=max(1, len(jobs) // threads)))
    results.sort(key=lambda t: t[0])
    return [r for _, r in results]


# ---------------------------------------------------------------------------
# Scenario runners.

def _require_placement(config, keys):
    missing = [k for k in keys if k not in config.placement]
    if missing:
        raise ConfigError(f"scenario {config.scenario} placement needs {missing}")


def run_scenario_a(config: ScenarioConfig) -> SweepResult:
    """UE and RIS translated together along +y away from the fixed BS."""
    _require_placement(config, ["bs", "ue0"])
    scene = load_scene(config.scene)
    cfg = config.trace_config()
    tx = np.array([*config.placement["bs"], config.tx_height_m])
    ue0 = np.array([*config.placement["ue0"], config.ue_height_m])
    has_ris = "ris0" in config.placement
    step = config.sweep_step_m
    n = config.sweep_count

    ue_pts = [ue0 + np.array([0.0, step * i, 0.0]) for i in range(n)]
    los_lists = trace_many(scene, tx, ue_pts, cfg)

    ris_centers = [None] * n
    tx_ris_lists = [None] * n
    ris_az = config.placement.get("ris_azimuth_deg", 180.0)
    if has_ris:
        r0 = np.array([*config.placement["ris0"], config.ris_height_m])
        ris_pts = [r0 + np.array([0.0, step * i, 0.0]) for i in range(n)]
        tx_ris_lists = trace_many(scene, tx, ris_pts, cfg)
        ris_centers = [p[:2] for p in ris_pts]

    raw = config.to_dict()
    jobs = [
        (scene, raw, i, ue_pts[i], ris_centers[i], ris_az, los_lists[i], tx_ris_lists[i])
        for i in range(n)
    ]
    reports = _run_jobs(jobs, _eval_sweep_point, config.threads)
    rows = [
        (
            i,
            step * i,
            rep.p_los_dbm,
            rep.p_ris_dbm,
            rep.p_total_dbm,
            rep.n_paths_los,
            rep.n_paths_t,
            rep.n_paths_r,
        )
        for i, rep in enumerate(reports)
    ]
    return SweepResult(SWEEP_COLUMNS, rows, config.to_dict())


def run_scenario_b(config: ScenarioConfig) -> SweepResult:
    """RIS swept between the fixed BS and UE (or the UE swept instead)."""
    _require_placement(config, ["bs", "ue"])
    scene = load_scene(config.scene)
    cfg = config.trace_config()
    tx = np.array([*config.placement["bs"], config.tx_height_m])
    ue = np.array([*config.placement["ue"], config.ue_height_m])
    step = config.sweep_step_m
    n = config.sweep_count
    ris_az = config.placement.get("ris_azimuth_deg", 180.0)
    raw = config.to_dict()

    if config.scenario == "B-variant-UE":
        _require_placement(config, ["ris"])
        ris_xy = config.placement["ris"]
        ris_c = np.array([*ris_xy, config.ris_height_m])
        ue_pts = [ue + np.array([0.0, step * i, 0.0]) for i in range(n)]
        los_lists = trace_many(scene, tx, ue_pts, cfg)
        tx_ris = trace_many(scene, tx, [ris_c], cfg)[0]
        jobs = [
            (scene, raw, i, ue_pts[i], ris_xy, ris_az, los_lists[i], tx_ris)
            for i in range(n)
        ]
        reports = _run_jobs(jobs, _eval_sweep_point, config.threads)
    else:
        _require_placement(config, ["ris_x", "ris_y0"])
        x = config.placement["ris_x"]
        y0 = config.placement["ris_y0"]
        ris_pts = [
            np.array([x, y0 + step * i, config.ris_height_m]) for i in range(n)
        ]
        los = trace_many(scene, tx, [ue], cfg)[0]
        tx_ris_lists = trace_many(scene, tx, ris_pts, cfg)
        jobs = [
            (scene, raw, i, ue, ris_pts[i][:2], ris_az, los, tx_ris_lists[i])
            for i in range(n)
        ]
        reports = _run_jobs(jobs, _eval_sweep_point, config.threads)

    rows = [
        (
            i,
            step * i,
            rep.p_los_dbm,
            rep.p_ris_dbm,
            rep.p_total_dbm,
            rep.n_paths_los,
            rep.n_paths_t,
            rep.n_paths_r,
        )
        for i, rep in enumerate(reports)
    ]
    return SweepResult(SWEEP_COLUMNS, rows, config.to_dict())


def grid_points(config: ScenarioConfig) -> list[np.ndarray]:
    _require_placement(config, ["grid_center"])
    cx, cy = config.placement["grid_center"]
    lam = em.wavelength(config.freq_ghz)
    s = config.grid_spacing_wavelengths * lam
    nx, ny = config.grid_nx, config.grid_ny
    pts = []
    for iy in range(ny):
        for ix in range(nx):
            pts.append(
                np.array(
                    [
                        cx + (ix - (nx - 1) / 2) * s,
                        cy + (iy - (ny - 1) / 2) * s,
                        config.ue_height_m,
                    ]
                )
            )
    return pts


def run_scenario_c(config: ScenarioConfig, diffraction: bool | None = None) -> SweepResult:
    """Coverage grid in the corner shadow: direct, RIS-only and totals.

    ``diffraction`` overrides the config's max_diffractions switch for the
    direct-channel trace (the RIS segments stay reflection-only, where the
    diffracted contribution is negligible).

    The RIS configuration is frozen across the grid: coefficients are
    computed once for the grid-center position and then held, as a
    deployed surface would be while coverage around the served spot is
    mapped.  Re-optimizing per point would average the panel response
    over the aperture and wash out the interference structure the map is
    meant to show.
    """
    _require_placement(config, ["bs", "ris", "grid_center"])
    scene = load_scene(config.scene)
    cfg = config.trace_config()
    diff_on = config.max_diffractions >= 1 if diffraction is None else diffraction
    tx = np.array([*config.placement["bs"], config.tx_height_m])
    ris_xy = config.placement["ris"]
    ris_az = config.placement.get("ris_azimuth_deg", 180.0)
    panel = _panel_for(config, ris_xy, ris_az)

    pts = grid_points(config)
    base_cfg = TraceConfig(
        max_reflections=cfg.max_reflections,
        max_diffractions=0,
        angular_resolution=cfg.angular_resolution,
        dedup_tolerance=cfg.dedup_tolerance,
    )
    bs_grid = trace_many(scene, tx, pts, base_cfg)
    ris_grid = trace_many(scene, panel.center, pts, base_cfg)
    tx_ris_paths = trace_many(scene, tx, [panel.center], base_cfg)[0]
    ht = ris.segment_channel(panel, tx_ris_paths, scene, config.freq_ghz, panel_at="dst")

    center = np.array([*config.placement["grid_center"], config.ue_height_m])
    ris_center_paths = trace_many(scene, panel.center, [center], base_cfg)[0]
    hr_center = ris.segment_channel(panel, ris_center_paths, scene, config.freq_ghz, panel_at="src")
    coeffs = channel.coefficients_for(
        config.policy, ht, hr_center, panel.n_elements, np.random.SeedSequence([config.seed])
    )

    raw = config.to_dict()
    jobs = [
        (scene, raw, i, pts[i], bs_grid[i], diff_on, (ris_xy, ris_az), ris_grid[i], ht, coeffs)
        for i in range(len(pts))
    ]
    reports = _run_jobs(jobs, _eval_c_point, config.threads)
    rows = [
        (
            i,
            float(pts[i][0]),
            float(pts[i][1]),
            rep.p_los_dbm,
            rep.p_ris_dbm,
            rep.p_total_dbm,
            rep.n_paths_los,
            rep.n_paths_t,
            rep.n_paths_r,
        )
        for i, rep in enumerate(reports)
    ]
    cfg_out = config.to_dict()
    cfg_out["max_diffractions"] = 1 if diff_on else 0
    coeff_rows = ris.coefficients_table(panel, coeffs)
    return SweepResult(
        GRID_COLUMNS,
        rows,
        cfg_out,
        extra_tables={"coefficients": (("element", "row", "col", "phase_rad"), coeff_rows)},
    )


def run(config: ScenarioConfig) -> SweepResult:
    if config.scenario in ("A", "free-space-A", "two-ray-A"):
        return run_scenario_a(config)
    if config.scenario in ("B", "free-space-B", "B-variant-UE"):
        return run_scenario_b(config)
    return run_scenario_c(config)


def find_deep_fade(result: SweepResult) -> int:
    """Sweep index of the deepest direct-channel fade (DF1 when unique)."""
    p = result.column("p_los_dbm")
    return int(np.argmin(p))


def ris_size_sweep(config: ScenarioConfig, sizes, policies=("optimal",), point_index=None):
    """Fixed geometry evaluated across RIS sizes and coefficient policies.

    Returns a SweepResult with columns (n_elements, policy, p_ris_dbm).
    The geometry is the sweep point ``point_index`` of the configured
    scenario (the deepest fade of the direct link when omitted).
    """
    for s in sizes:
        side = math.isqrt(int(s))
        if side * side != int(s):
            raise ConfigError(f"square arrangement needs perfect-square sizes, got {s}")
    scene = load_scene(config.scene)
    cfg = config.trace_config()
    base = run_scenario_a(config) if point_index is None else None
    idx = find_deep_fade(base) if point_index is None else int(point_index)

    tx = np.array([*config.placement["bs"], config.tx_height_m])
    ue = np.array([*config.placement["ue0"], config.ue_height_m]) + np.array(
        [0.0, config.sweep_step_m * idx, 0.0]
    )
    ris_xy = np.array(config.placement["ris0"]) + np.array([0.0, config.sweep_step_m * idx])
    ris_az = config.placement.get("ris_azimuth_deg", 180.0)

    rows = []
    for n_el in sizes:
        for policy in policies:
            cfg_n = ScenarioConfig.from_dict({**config.to_dict(), "n_elements": int(n_el)})
            panel = _panel_for(cfg_n, ris_xy, ris_az)
            rep = channel.evaluate(
                scene,
                tx,
                ue,
                panel,
                cfg,
                policy=policy,
                freq_ghz=config.freq_ghz,
                ptx_dbm=config.ptx_dbm,
                seed=np.random.SeedSequence([config.seed, int(n_el), hash(policy) & 0x7FFFFFFF]),
                path_filter=config.path_filter,
            )
            rows.append((int(n_el), policy, rep.p_ris_dbm))
    return SweepResult(("n_elements", "policy", "p_ris_dbm"), rows, config.to_dict())
