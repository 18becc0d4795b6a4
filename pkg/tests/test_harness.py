"""Sweep execution, serialization round trips, and the command line."""

import math

import numpy as np
import pytest

from phburgers import cli, diagnostics, fem1d, integrator, phsystem, sweep


def fabricated_result():
    cells = [
        sweep.SweepCell(0.5, 0.0, 0.1, 6.454e-2, 0.4, 282, "completed"),
        sweep.SweepCell(0.5, 1.0, 0.1, 1.0 / 3.0, 0.4, 12, "completed"),
        sweep.SweepCell(1.0, 0.0, 0.1, 2.065e-4, 0.017, 67, "dt_underflow"),
        sweep.SweepCell(1.0, 1.0, 0.1, float("nan"), float("nan"), 0,
                        "error: ValueError: boom"),
    ]
    return sweep.SweepResult(cells=tuple(cells))


# ---------------------------------------------------------------- tables


def test_csv_header_is_pinned():
    assert sweep.CSV_HEADER == ("alpha", "beta", "h", "var", "t_final",
                                "n_steps", "termination")
    text = sweep.format_table_csv(fabricated_result())
    assert text.splitlines()[0] == "alpha,beta,h,var,t_final,n_steps,termination"


def test_table_csv_round_trip_is_exact():
    result = fabricated_result()
    back = sweep.parse_table_csv(sweep.format_table_csv(result))
    assert len(back.cells) == len(result.cells)
    for a, b in zip(result.cells, back.cells):
        assert (a.alpha, a.beta, a.h) == (b.alpha, b.beta, b.h)
        assert a.n_steps == b.n_steps and a.termination == b.termination
        for x, y in ((a.var, b.var), (a.t_final, b.t_final)):
            assert x == y or (math.isnan(x) and math.isnan(y))


def test_parse_rejects_foreign_header():
    with pytest.raises(ValueError):
        sweep.parse_table_csv("a,b,c\n1,2,3\n")


def test_text_table_layout():
    text = sweep.format_table_text(fabricated_result())
    assert "alpha = 0.5" in text and "alpha = 1" in text
    assert "beta \\ h" in text
    assert "error: ValueError: boom" in text
    assert "6.454e-02 / 0.400 (282)" in text


def test_emit_table_dispatch():
    result = fabricated_result()
    assert sweep.emit_table(result) == sweep.format_table_csv(result)
    assert sweep.emit_table(result, "text") == sweep.format_table_text(result)
    with pytest.raises(ValueError):
        sweep.emit_table(result, "json")


def test_result_cell_lookup():
    result = fabricated_result()
    assert result.cell(0.5, 1.0, 0.1).n_steps == 12
    with pytest.raises(KeyError):
        result.cell(9.0, 9.0, 9.0)


def test_grid_validation_and_cells_order():
    grid = sweep.SweepGrid(alphas=(1.0, 2.0), betas=(0.0,), hs=(0.1, 0.05))
    assert grid.cells() == [(1.0, 0.0, 0.1), (1.0, 0.0, 0.05),
                            (2.0, 0.0, 0.1), (2.0, 0.0, 0.05)]
    with pytest.raises(ValueError):
        sweep.SweepGrid(alphas=(0.0,))
    with pytest.raises(ValueError):
        sweep.SweepGrid(betas=(-1.0,))
    with pytest.raises(ValueError):
        sweep.SweepGrid(hs=(0.0,))


def test_default_grid_matches_study():
    grid = sweep.SweepGrid()
    assert grid.alphas == (0.5, 1.0, 2.0)
    assert grid.betas == (0.0, 1.0, 2.0, 5.0)
    assert grid.hs == (5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2)


def test_cell_tag_is_unique_per_cell():
    tags = {sweep.cell_tag(a, b, h) for (a, b, h) in sweep.SweepGrid().cells()}
    assert len(tags) == 60
    assert sweep.cell_tag(0.5, 5.0, 1e-3) == "a0.5_b5_h0.001"


# ----------------------------------------------------------------- sweep


def test_sweep_cell_agrees_with_direct_run(tmp_path):
    grid = sweep.SweepGrid(alphas=(1.0,), betas=(0.0,), hs=(0.05,),
                           overrides={"t_final": 0.1})
    result = sweep.run_sweep(grid, workers=1, out_dir=tmp_path)
    cell = result.cell(1.0, 0.0, 0.05)
    direct = integrator.run_simulation(
        integrator.RunConfig(h=0.05, alpha=1.0, beta=0.0, t_final=0.1))
    assert cell.termination == "completed" == direct.termination_reason
    assert cell.var == direct.var
    assert cell.t_final == direct.t_reached
    assert cell.n_steps == direct.n_steps
    ledger_file = tmp_path / f"ledger_{sweep.cell_tag(1.0, 0.0, 0.05)}.csv"
    assert ledger_file.exists()
    assert ledger_file.read_text().splitlines()[0] == ",".join(sweep.LEDGER_HEADER)


def test_sweep_worker_pool_matches_inline():
    grid = sweep.SweepGrid(alphas=(1.0,), betas=(0.0, 1.0), hs=(0.05,),
                           overrides={"t_final": 0.05})
    inline = sweep.run_sweep(grid, workers=1)
    pooled = sweep.run_sweep(grid, workers=2)
    for a, b in zip(inline.cells, pooled.cells):
        assert a == b


def test_sweep_records_failing_cell_without_raising():
    grid = sweep.SweepGrid(alphas=(1.0,), betas=(0.0,), hs=(0.3,))
    result = sweep.run_sweep(grid, workers=1)
    cell = result.cells[0]
    assert cell.termination.startswith("error: ValueError")
    assert math.isnan(cell.var)
    # and the error cell round-trips through the CSV
    back = sweep.parse_table_csv(sweep.format_table_csv(result))
    assert back.cells[0].termination == cell.termination


# ------------------------------------------------------------ run output


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "out.txt"
    sweep.atomic_write_text(target, "first")
    sweep.atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert list(tmp_path.iterdir()) == [target]


def test_write_run_outputs(tmp_path):
    run = integrator.run_simulation(
        integrator.RunConfig(h=0.1, beta=1.0, t_final=0.05, n_snapshots=5))
    paths = sweep.write_run_outputs(run, tmp_path)
    assert paths[0].name == "ledger.csv"
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "t,dt,newton_iters,H,E,qH,qE,QH,QE,bal"
    assert len(lines) == 1 + len(run.ledger)
    snap_files = sorted(p.name for p in paths[1:])
    assert len(snap_files) == len(run.snapshots)
    assert snap_files[0].startswith("snapshot_00_t0.000000")
    mesh = fem1d.build_mesh(run.config.mesh_elems)
    for p in paths[1:]:
        rows = p.read_text().splitlines()
        assert rows[0] == "x,v,e,e_r"
        assert len(rows) == 1 + mesh.n_nodes


def test_snapshot_csv_values_round_trip():
    ops = fem1d.assemble_operators(fem1d.build_mesh(4))
    v = np.random.default_rng(12).uniform(0.2, 1.2, ops.mesh.n_interior)
    st = phsystem.make_state(ops, v, nu=0.05)
    text = sweep.format_snapshot_csv(ops.mesh, st)
    rows = [line.split(",") for line in text.splitlines()[1:]]
    got_v = np.array([float(r[1]) for r in rows])
    np.testing.assert_array_equal(got_v, fem1d.embed_interior(ops.mesh, v))
    got_x = np.array([float(r[0]) for r in rows])
    np.testing.assert_array_equal(got_x, ops.mesh.nodes)


# ------------------------------------------------------------------- cli


def test_cli_oracle_shock_speed(capsys):
    assert cli.main(["oracle", "--shock-speed", "1", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.5"


def test_cli_oracle_shock_dissipation(capsys):
    assert cli.main(["oracle", "--shock-dissipation", "1", "0"]) == 0
    de, dh = map(float, capsys.readouterr().out.split())
    assert de == pytest.approx(-1.0 / 12.0)
    assert dh == pytest.approx(-1.0 / 24.0)


def test_cli_oracle_shock_time(capsys):
    assert cli.main(["oracle", "--shock-time"]) == 0
    t = float(capsys.readouterr().out)
    assert t == pytest.approx(diagnostics.shock_formation_time(), rel=1e-10)


def test_cli_oracle_solution(capsys):
    assert cli.main(["oracle", "--solution", "0", "0.5"]) == 0
    assert float(capsys.readouterr().out) == 1.0
    # post-shock time is a usage error, not a crash
    assert cli.main(["oracle", "--solution", "0.3", "0.5"]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_usage_errors(capsys):
    assert cli.main(["nope"]) == 1
    assert cli.main(["run", "--h", "0.3"]) == 1
    assert cli.main(["run", "--h", "0.1", "--n-elems", "10"]) == 1
    capsys.readouterr()


def test_cli_run_writes_outputs(tmp_path, capsys):
    code = cli.main(["run", "--h", "0.1", "--t-final", "0.05",
                     "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "ledger.csv").exists()
    err = capsys.readouterr().err
    assert "run: t reached" in err and "termination completed" in err


def test_cli_run_reports_dt_underflow(tmp_path, capsys):
    code = cli.main(["run", "--h", "0.01", "--alpha", "0.5", "--beta", "5",
                     "--out-dir", str(tmp_path)])
    assert code == 3
    err = capsys.readouterr().err
    assert "termination dt_underflow" in err
    assert "run: flagged early_termination" in err


def test_cli_sweep_writes_table(tmp_path, capsys):
    code = cli.main(["sweep", "--alphas", "1", "--betas", "0", "--hs", "0.05",
                     "--t-final", "0.1", "--workers", "1",
                     "--out-dir", str(tmp_path)])
    assert code == 0
    table = sweep.parse_table_csv((tmp_path / "table.csv").read_text())
    assert len(table.cells) == 1
    assert table.cells[0].termination == "completed"
    assert "sweep: 1 cells, 0 errored" in capsys.readouterr().err


def test_cli_sweep_text_format(tmp_path, capsys):
    code = cli.main(["sweep", "--alphas", "1", "--betas", "0", "--hs", "0.1",
                     "--t-final", "0.05", "--workers", "1", "--format", "text",
                     "--out-dir", str(tmp_path)])
    assert code == 0
    assert "alpha = 1" in (tmp_path / "table.txt").read_text()
    capsys.readouterr()


def test_cli_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# one run\nh = 0.1\nt_final = 0.05\n")
    code = cli.main(["run", "--config", str(cfg), "--t-final", "0.02",
                     "--out-dir", str(tmp_path / "out")])
    assert code == 0
    err = capsys.readouterr().err
    assert "t reached 0.02 of 0.02" in err  # flag beat the file entry


def test_cli_config_file_errors(tmp_path, capsys):
    bogus = tmp_path / "bad.cfg"
    bogus.write_text("h = 0.1\nbogus = 3\n")
    assert cli.main(["run", "--config", str(bogus)]) == 1
    assert "unknown key" in capsys.readouterr().err
    malformed = tmp_path / "mal.cfg"
    malformed.write_text("just words\n")
    assert cli.main(["run", "--config", str(malformed)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    capsys.readouterr()


def test_cli_verify_passes(capsys):
    assert cli.main(["verify"]) == 0
    err = capsys.readouterr().err
    assert "checks passed" in err and "FAIL" not in err
