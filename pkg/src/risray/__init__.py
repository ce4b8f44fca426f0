"""Deterministic ray-tracing simulator for RIS-assisted wireless channels."""

__version__ = "0.1.0"

from risray.geo import Material, GeoAnchor, Scene, load_scene, itu_permittivity, geo_to_local
from risray.channel import ChannelReport, evaluate, received_power_dbm

__all__ = [
    "__version__",
    "Material",
    "GeoAnchor",
    "Scene",
    "load_scene",
    "itu_permittivity",
    "geo_to_local",
    "ChannelReport",
    "evaluate",
    "received_power_dbm",
]
