"""Frontend tests: schema handling, determinism, and end-to-end rendering
of real simulator outputs produced through the risray command line."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from risfigures import cli, render, specs


def risray_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "risray.cli", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def line_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("line")
    risray_cli(
        "run", "--config", "two_ray_a", "--out", str(out),
        "--set", "sweep_count=40",
        "--set", "size_sweep_n=[16,64,256]",
    )
    return out


@pytest.fixture(scope="session")
def grid_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("grid")
    risray_cli(
        "coverage", "--config", "scenario_c", "--out", str(out),
        "--set", "grid_nx=5", "--set", "grid_ny=4",
        "--set", "angular_resolution_deg=1.0",
        "--set", "max_diffractions=1",
        "--set", "n_elements=64",
    )
    return out


class TestSchemas:
    def test_every_figure_has_one_schema(self):
        for spec in specs.SPECS.values():
            assert spec.schema in (specs.SWEEP, specs.GRID, specs.SIZES)

    def test_missing_column_diagnostic(self, tmp_path):
        bad = tmp_path / "sweep.csv"
        bad.write_text("index,coord_m\n0,0.0\n")
        with pytest.raises(render.SchemaError, match="p_los_dbm"):
            render.render(specs.SPECS["fig4"], tmp_path, tmp_path / "out")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            render.render(specs.SPECS["fig9"], tmp_path, tmp_path / "out")


class TestLineFigures:
    @pytest.mark.parametrize("fid", ["fig4", "fig5", "fig6", "fig7", "fig8", "fig11", "fig12", "fig13"])
    def test_renders(self, line_run, tmp_path, fid):
        written = render.render(specs.SPECS[fid], line_run, tmp_path)
        names = {p.suffix for p in written}
        assert names == {".png", ".svg"}
        assert all(p.stat().st_size > 1000 for p in written)

    def test_sizes_figures(self, line_run, tmp_path):
        for fid in ("fig9", "fig10"):
            written = render.render(specs.SPECS[fid], line_run, tmp_path)
            assert len(written) == 2

    def test_input_not_mutated(self, line_run, tmp_path):
        before = (line_run / "sweep.csv").read_bytes()
        render.render(specs.SPECS["fig4"], line_run, tmp_path)
        assert (line_run / "sweep.csv").read_bytes() == before

    def test_deterministic_rerender(self, line_run, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        render.render(specs.SPECS["fig8"], line_run, a)
        render.render(specs.SPECS["fig8"], line_run, b)
        assert (a / "fig8.svg").read_bytes() == (b / "fig8.svg").read_bytes()
        assert (a / "fig8.png").read_bytes() == (b / "fig8.png").read_bytes()


class TestGridFigures:
    @pytest.mark.parametrize("fid", ["fig14", "fig15", "fig16"])
    def test_renders(self, grid_run, tmp_path, fid):
        written = render.render(specs.SPECS[fid], grid_run, tmp_path)
        assert {p.suffix for p in written} == {".png", ".svg"}

    def test_line_figures_reject_grid(self, grid_run, tmp_path):
        with pytest.raises(render.SchemaError, match="coord_m"):
            render.render(specs.SPECS["fig4"], grid_run, tmp_path)


class TestCli:
    def test_single_figure(self, line_run, tmp_path):
        out = tmp_path / "plots"
        assert cli.main(["fig4", "--in", str(line_run), "--out", str(out)]) == 0
        assert (out / "fig4.png").exists()
        assert (out / "fig4.svg").exists()

    def test_all_renders_available(self, line_run, tmp_path, capsys):
        out = tmp_path / "plots"
        assert cli.main(["all", "--in", str(line_run), "--out", str(out)]) == 0
        err = capsys.readouterr().err
        # grid-only figures are skipped on a line run, never errored
        assert "skipped fig14" in err
        for fid in ("fig4", "fig8", "fig9"):
            assert (out / f"{fid}.png").exists()

    def test_every_emitted_csv_renders(self, line_run, grid_run, tmp_path):
        # each CSV the simulator wrote is consumed by at least one figure
        for run in (line_run, grid_run):
            manifest = json.loads((run / "manifest.json").read_text())
            consumed = set()
            _, skipped = render.render_all(run, tmp_path / "x")
            rendered = set(specs.SPECS) - set(skipped)
            for fid in rendered:
                consumed.add(specs.SPECS[fid].input_name)
            for name in manifest["outputs"]:
                if name.endswith(".csv") and name != "coefficients.csv":
                    assert name in consumed, f"{name} not covered by any figure"

    def test_unknown_figure(self, tmp_path):
        assert cli.main(["fig99", "--in", str(tmp_path), "--out", str(tmp_path)]) == 1

    def test_missing_input_exit_2(self, tmp_path):
        assert cli.main(["fig4", "--in", str(tmp_path), "--out", str(tmp_path)]) == 2

    def test_schema_mismatch_exit_3(self, tmp_path):
        (tmp_path / "sweep.csv").write_text("a,b\n1,2\n")
        assert cli.main(["fig4", "--in", str(tmp_path), "--out", str(tmp_path / "o")]) == 3

    def test_console_script(self, line_run, tmp_path):
        proc = subprocess.run(
            ["render_figures", "fig4", "--in", str(line_run), "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
