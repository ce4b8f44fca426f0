"""Total channel assembly: direct link plus RIS cascade, power conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from risray import em, ris
from risray.tracer import filter_paths, trace


@dataclass(frozen=True)
class ChannelReport:
    """Complex channel terms and their received powers for one geometry."""

    h_los: complex
    h_ris: complex
    h_total: complex
    p_los_dbm: float
    p_ris_dbm: float
    p_total_dbm: float
    n_paths_los: int
    n_paths_t: int
    n_paths_r: int


def received_power_dbm(h: complex, ptx_dbm: float) -> float:
    """ptx_dbm + 20 log10 |h|; -inf for a null channel."""
    mag = abs(h)
    if mag == 0.0:
        return float("-inf")
    return ptx_dbm + 20.0 * math.log10(mag)


def coefficients_for(policy, ht, hr, n_elements: int, seed=None) -> ris.RisCoefficients:
    """Coefficient vector for a policy name ('optimal', 'unit', 'random')."""
    if isinstance(policy, ris.RisCoefficients):
        return policy
    if policy == "optimal":
        return ris.optimal_coeffs(ht, hr)
    if policy == "unit":
        return ris.unit_coeffs(n_elements)
    if policy == "random":
        return ris.random_coeffs(n_elements, seed)
    raise ValueError(f"unknown coefficient policy {policy!r}")


def segment_channels(scene, tx, rx, panel, cfg, freq_ghz=28.0, path_filter="all"):
    """Per-element channels of both RIS legs for one geometry."""
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    tx_panel = filter_paths(trace(scene, tx, panel.center, cfg), path_filter)
    panel_rx = filter_paths(trace(scene, panel.center, rx, cfg), path_filter)
    ht = ris.segment_channel(panel, tx_panel, scene, freq_ghz, panel_at="dst")
    hr = ris.segment_channel(panel, panel_rx, scene, freq_ghz, panel_at="src")
    return ht, hr


def evaluate(
    scene,
    tx,
    rx,
    panel,
    cfg,
    policy="optimal",
    freq_ghz: float = 28.0,
    ptx_dbm: float = 30.0,
    seed=None,
    path_filter="all",
    los_paths=None,
    tx_panel_paths=None,
) -> ChannelReport:
    """One end-to-end channel evaluation.

    ``panel`` may be None (direct link only).  ``path_filter`` applies to
    every traced leg (used by the two-ray variants).  Precomputed path
    lists may be passed to reuse shared traces across sweep points.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)

    if los_paths is None:
        los_paths = trace(scene, tx, rx, cfg)
    los_paths = filter_paths(los_paths, path_filter)
    h_los = complex(sum(em.path_gain(p, scene, freq_ghz).amplitude for p in los_paths))

    h_ris = 0.0 + 0.0j
    n_t = n_r = 0
    if panel is not None:
        if tx_panel_paths is None:
            tx_panel_paths = trace(scene, tx, panel.center, cfg)
        tx_panel_paths = filter_paths(tx_panel_paths, path_filter)
        panel_rx_paths = filter_paths(trace(scene, panel.center, rx, cfg), path_filter)
        ht = ris.segment_channel(panel, tx_panel_paths, scene, freq_ghz, panel_at="dst")
        hr = ris.segment_channel(panel, panel_rx_paths, scene, freq_ghz, panel_at="src")
        coeffs = coefficients_for(policy, ht, hr, panel.n_elements, seed)
        h_ris = ris.cascade(ht, hr, coeffs)
        n_t = len(tx_panel_paths)
        n_r = len(panel_rx_paths)

    h_total = h_los + h_ris
    return ChannelReport(
        h_los=h_los,
        h_ris=h_ris,
        h_total=h_total,
        p_los_dbm=received_power_dbm(h_los, ptx_dbm),
        p_ris_dbm=received_power_dbm(h_ris, ptx_dbm),
        p_total_dbm=received_power_dbm(h_total, ptx_dbm),
        n_paths_los=len(los_paths),
        n_paths_t=n_t,
        n_paths_r=n_r,
    )
