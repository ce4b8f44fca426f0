"""CSV readers and matplotlib renderers for the figure registry.

Only the simulator's published outputs are consumed: the CSV tables and,
when present, the run manifest (used to reconstruct absolute distances
for overlay curves). Rendering never mutates inputs and is deterministic
for identical input bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from scipy.optimize import least_squares  # noqa: E402
from scipy.special import erf  # noqa: E402

from risfigures.specs import SPECS, FigureSpec  # noqa: E402


class SchemaError(ValueError):
    """Input CSV does not match the figure's schema."""


def read_table(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    cols: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        values = [r[j] for r in body]
        try:
            cols[name] = np.array([float(v) for v in values])
        except ValueError:
            cols[name] = np.array(values, dtype=object)
    return cols


def check_schema(spec: FigureSpec, cols: dict) -> None:
    missing = [c for c in spec.schema if c not in cols]
    if missing:
        raise SchemaError(
            f"{spec.figure_id} needs columns {list(spec.schema)}; "
            f"missing {missing}, found {sorted(cols)}"
        )


def load_manifest(in_dir: Path) -> dict | None:
    p = in_dir / "manifest.json"
    if p.exists():
        return json.loads(p.read_text())
    return None


def _distances(cols, manifest) -> np.ndarray | None:
    """Absolute link distances for a line sweep, when reconstructible."""
    if manifest is None:
        return None
    cfg = manifest.get("config", {})
    placement = cfg.get("placement", {})
    if "bs" not in placement or "ue0" not in placement:
        return None
    bs = np.array([*placement["bs"], cfg.get("tx_height_m", 0.0)])
    ue0 = np.array([*placement["ue0"], cfg.get("ue_height_m", 0.0)])
    coord = cols["coord_m"]
    pts = ue0[None, :] + np.stack([np.zeros_like(coord), coord, np.zeros_like(coord)], axis=1)
    return np.linalg.norm(pts - bs[None, :], axis=1)


def _finite(x, y):
    m = np.isfinite(y)
    return x[m], y[m]


def _style():
    plt.rcParams.update({"figure.figsize": (6.4, 4.2), "svg.hashsalt": "risfigures"})


def _render_power_logx(spec, cols, manifest, ax):
    d = _distances(cols, manifest)
    x = d if d is not None else cols["coord_m"]
    for name in spec.options["series"]:
        xs, ys = _finite(x, cols[name])
        ax.plot(xs, ys, label=name.replace("_dbm", ""))
    if spec.overlay:
        xs, ys = _finite(x, cols["p_los_dbm"])
        if len(xs):
            ref = ys[0] - 20 * np.log10(xs / xs[0])
            ax.plot(xs, ref, "r--", lw=1, label="free-space slope")
    ax.set_xscale("log")
    ax.set_xlabel("distance (m)" if d is not None else "sweep coordinate (m)")
    ax.set_ylabel("received power (dBm)")


def _render_power_line(spec, cols, manifest, ax):
    x = cols["coord_m"]
    for name in spec.options["series"]:
        xs, ys = _finite(x, cols[name])
        ax.plot(xs, ys, lw=0.9, label=name.replace("_dbm", ""))
    ax.set_xlabel("sweep coordinate (m)")
    ax.set_ylabel("received power (dBm)")


def _render_placement(spec, cols, manifest, ax):
    x, p = _finite(cols["coord_m"], cols["p_ris_dbm"])
    ax.plot(x, p, label="surface path")
    if spec.overlay and len(x) > 5:
        # inverse-quartic law: fit a degree-4 polynomial to 1/linear power
        lin = 10 ** (p / 10)
        coeff = np.polynomial.Polynomial.fit(x, 1.0 / lin, 4)
        model = 1.0 / coeff(x)
        ax.plot(x, 10 * np.log10(model), "r--", lw=1, label="quartic-denominator fit")
    ax.set_xlabel("surface position (m)")
    ax.set_ylabel("received power (dBm)")


def _render_ecdf_diff(spec, cols, manifest, ax):
    diff = cols["p_los_dbm"] - cols["p_ris_dbm"]
    diff = diff[np.isfinite(diff)]
    if diff.size < 3:
        raise SchemaError(f"{spec.figure_id}: not enough finite difference samples")
    xs = np.sort(diff)
    ys = np.arange(1, len(xs) + 1) / len(xs)
    ax.step(xs, ys, where="post", label="empirical")
    if spec.overlay:
        y_mid = (np.arange(1, len(xs) + 1) - 0.5) / len(xs)

        def resid(p):
            return 0.5 * (1 + erf((xs - p[0]) / (abs(p[1]) * math.sqrt(2)))) - y_mid

        sol = least_squares(resid, x0=[float(xs.mean()), float(xs.std() or 1.0)], method="lm")
        mu, sigma = sol.x[0], abs(sol.x[1])
        grid = np.linspace(xs[0], xs[-1], 300)
        ax.plot(grid, 0.5 * (1 + erf((grid - mu) / (sigma * math.sqrt(2)))), "r--",
                lw=1, label=f"normal fit ({mu:.1f}, {sigma:.1f})")
    ax.set_xlabel("power difference (dB)")
    ax.set_ylabel("cumulative probability")


def _render_size_law(spec, cols, manifest, ax):
    policies = [str(p) for p in np.unique(cols["policy"])]
    wanted = [p for p in spec.options["policies"] if p in policies]
    if not wanted:
        raise SchemaError(f"{spec.figure_id}: policies {spec.options['policies']} not in table")
    for policy in wanted:
        m = cols["policy"] == policy
        n = cols["n_elements"][m].astype(float)
        p = cols["p_ris_dbm"][m]
        order = np.argsort(n)
        ax.plot(n[order], p[order], "o-", label=policy)
    if spec.overlay and "optimal" in wanted:
        m = cols["policy"] == "optimal"
        n = np.sort(cols["n_elements"][m].astype(float))
        p0 = cols["p_ris_dbm"][m][np.argsort(cols["n_elements"][m].astype(float))][0]
        ax.plot(n, p0 + 20 * np.log10(n / n[0]), "r--", lw=1, label="square-law reference")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("element count")
    ax.set_ylabel("received power (dBm)")


def _render_heatmap(spec, cols, manifest, ax):
    x = cols["x_m"]
    y = cols["y_m"]
    v = cols[spec.options["column"]].copy()
    xs = np.unique(x)
    ys = np.unique(y)
    if len(xs) * len(ys) != len(v):
        raise SchemaError(f"{spec.figure_id}: grid is not rectangular "
                          f"({len(xs)}x{len(ys)} vs {len(v)} rows)")
    finite = np.isfinite(v)
    if finite.any():
        v[~finite] = v[finite].min() - 10.0
    grid = np.full((len(ys), len(xs)), np.nan)
    ix = np.searchsorted(xs, x)
    iy = np.searchsorted(ys, y)
    grid[iy, ix] = v
    im = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    plt.colorbar(im, ax=ax, label="received power (dBm)")
    ax.set_xlabel("east (m)")
    ax.set_ylabel("north (m)")
    ax.set_aspect("equal")


_RENDERERS = {
    "power_logx": _render_power_logx,
    "power_line": _render_power_line,
    "placement": _render_placement,
    "ecdf_diff": _render_ecdf_diff,
    "size_law": _render_size_law,
    "heatmap": _render_heatmap,
}


def render(spec: FigureSpec, in_dir, out_dir, overlay: bool | None = None) -> list[Path]:
    """Render one figure; returns the written image paths (PNG and SVG)."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    src = in_dir / spec.input_name
    if not src.exists():
        raise FileNotFoundError(f"{spec.figure_id}: input {src} not found")
    cols = read_table(src)
    check_schema(spec, cols)
    if overlay is not None:
        spec = FigureSpec(spec.figure_id, spec.input_name, spec.schema, spec.kind,
                          spec.title, overlay, spec.options)
    manifest = load_manifest(in_dir)

    _style()
    fig, ax = plt.subplots()
    try:
        _RENDERERS[spec.kind](spec, cols, manifest, ax)
        ax.set_title(spec.title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
        fig.tight_layout()
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for ext, meta in (("png", None), ("svg", {"Date": None})):
            path = out_dir / f"{spec.figure_id}.{ext}"
            fig.savefig(path, dpi=120, metadata=meta)
            written.append(path)
        return written
    finally:
        plt.close(fig)


def render_all(in_dir, out_dir, overlay: bool | None = None):
    """Render every figure whose input file is present and schema-compatible.

    Returns (written, skipped) where skipped maps figure id to the reason.
    """
    written: list[Path] = []
    skipped: dict[str, str] = {}
    for fid, spec in SPECS.items():
        src = Path(in_dir) / spec.input_name
        if not src.exists():
            skipped[fid] = f"missing {spec.input_name}"
            continue
        try:
            cols = read_table(src)
            check_schema(spec, cols)
        except SchemaError as exc:
            skipped[fid] = str(exc)
            continue
        written.extend(render(spec, in_dir, out_dir, overlay))
    return written, skipped
