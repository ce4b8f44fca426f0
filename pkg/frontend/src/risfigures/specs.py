"""Figure registry: one input schema per figure id."""

from dataclasses import dataclass, field

SWEEP = ("index", "coord_m", "p_los_dbm", "p_ris_dbm", "p_total_dbm",
         "n_paths_los", "n_paths_t", "n_paths_r")
GRID = ("index", "x_m", "y_m", "p_los_dbm", "p_ris_dbm", "p_total_dbm",
        "n_paths_los", "n_paths_t", "n_paths_r")
SIZES = ("n_elements", "policy", "p_ris_dbm")


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    input_name: str          # file expected inside the input directory
    schema: tuple            # required columns
    kind: str                # renderer selector
    title: str
    overlay: bool = True     # oracle overlay on by default
    options: dict = field(default_factory=dict)


SPECS = {
    s.figure_id: s
    for s in [
        FigureSpec("fig4", "sweep.csv", SWEEP, "power_logx",
                   "Free-space sweep", options={"series": ("p_los_dbm", "p_ris_dbm")}),
        FigureSpec("fig5", "sweep.csv", SWEEP, "placement",
                   "Received power against surface position"),
        FigureSpec("fig6", "sweep.csv", SWEEP, "power_line",
                   "Two-ray sweep", options={"series": ("p_los_dbm", "p_ris_dbm")}),
        FigureSpec("fig7", "sweep.csv", SWEEP, "power_line",
                   "Multipath sweep",
                   options={"series": ("p_los_dbm", "p_ris_dbm", "p_total_dbm")}),
        FigureSpec("fig8", "sweep.csv", SWEEP, "ecdf_diff",
                   "Power difference distribution"),
        FigureSpec("fig9", "sizes.csv", SIZES, "size_law",
                   "Cascade power against element count",
                   options={"policies": ("optimal",)}),
        FigureSpec("fig10", "sizes.csv", SIZES, "size_law",
                   "Coefficient policies against element count",
                   options={"policies": ("optimal", "unit", "random")}),
        FigureSpec("fig11", "sweep.csv", SWEEP, "power_line",
                   "Multipath sweep with diffraction",
                   options={"series": ("p_los_dbm", "p_ris_dbm", "p_total_dbm")}),
        FigureSpec("fig12", "sweep.csv", SWEEP, "placement",
                   "Surface position sweep, multipath"),
        FigureSpec("fig13", "sweep.csv", SWEEP, "power_line",
                   "Receiver moved away from the surface",
                   options={"series": ("p_ris_dbm",)}),
        FigureSpec("fig14", "sweep.csv", GRID, "heatmap",
                   "Coverage without the surface", options={"column": "p_los_dbm"}),
        FigureSpec("fig15", "sweep.csv", GRID, "heatmap",
                   "Coverage from the surface only", options={"column": "p_ris_dbm"}),
        FigureSpec("fig16", "sweep_diffraction.csv", GRID, "heatmap",
                   "Coverage with diffraction, no surface",
                   options={"column": "p_los_dbm"}),
    ]
}
