#!/usr/bin/env python3
"""Benchmark the compiled ray-geometry kernel against the numpy fallback.

Times the two hot operations (nearest-hit batches and full SBR candidate
search) on the bundled scenes, then a small end-to-end trace.  Run after
an editable install:

    python benchmarks/bench_kernel.py [--quick]
"""

import argparse
import math
import time

import numpy as np

from risray import geo
from risray.tracer import TraceConfig, kernel, sbr


def bench(fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    backends = {}
    for name in ("python", "compiled"):
        try:
            backends[name] = kernel.get_backend(name)
        except ImportError:
            print(f"(backend {name} unavailable)")
    if len(backends) < 2:
        print("need both backends for a comparison; build the extension first")

    scene = geo.load_scene("suburb-28ghz")
    res_deg = 2.0 if args.quick else 1.0
    dirs, spacing = sbr.launch_grid(math.radians(res_deg))
    src = np.array([0.0, 0.0, 5.0])
    rx = np.array([[0.0, 20.0 + 0.5 * i, 1.0] for i in range(40)])

    print(f"scene: suburb-28ghz ({len(scene.triangles)} triangles), "
          f"{len(dirs)} launch directions, {len(rx)} receivers\n")
    header = f"{'operation':<28}" + "".join(f"{n:>14}" for n in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rows = [
        (
            "nearest_hit x dirs",
            lambda be, geom: be.nearest_hit(geom, scene.tri_face, src, dirs),
        ),
        (
            "sbr_candidates (5 bounces)",
            lambda be, geom: be.sbr_candidates(
                geom, scene.tri_face, src, dirs, 5, rx, 0.05, 1.5 * spacing
            ),
        ),
    ]
    for label, op in rows:
        times = {}
        for name, be in backends.items():
            geom = be.prepare(scene.triangles)
            times[name] = bench(lambda: op(be, geom))
        line = f"{label:<28}" + "".join(f"{times[n] * 1e3:>12.1f}ms" for n in backends)
        if "python" in times and "compiled" in times:
            line += f"{times['python'] / times['compiled']:>9.1f}x"
        print(line)

    # end-to-end trace through the selector (import-time backend)
    cfg = TraceConfig(max_reflections=3, angular_resolution=math.radians(res_deg))
    t = bench(lambda: sbr.trace(scene, src, rx[0], cfg), repeat=2)
    print(f"\ntrace() end-to-end with active backend [{kernel.BACKEND}]: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
