import subprocess
import sys

import pytest

from panelrank.cli import main

WORKED_3X2 = "entity,g1,g2\na,2,0\nb,1,1\nc,0,2\n"
WORKED_2X2 = "entity,g1,g2\na,1,1\nb,1,0\n"
DISTINCT_3X2 = "entity,g1,g2\na,50,40\nb,30,20\nc,10,5\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    return [line.split(",") for line in path.read_text().strip().split("\n")]


class TestCompute:
    def test_worked_panel_spectral_scores(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_3X2)
        rc = main(["compute", "--panel", "2024=" + panel, "--method",
                   "spectral", "--out", str(tmp_path / "out"),
                   "--charts", "none"])
        assert rc == 0
        rows = read_csv(tmp_path / "out" / "scores_entities_2024.csv")
        assert rows[0] == ["entity", "total_score", "applicable_count",
                           "composite_mean", "complexity_spectral"]
        assert [r[4] for r in rows[1:]] == ["1.000000"] * 3

    def test_zero_row_exits_2_naming_entity(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv",
                      "entity,g1,g2\na,0,0\nb,1,1\nc,2,0\n")
        rc = main(["compute", "--panel", "2024=" + panel,
                   "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "entity: a" in capsys.readouterr().err

    def test_all_zero_matrix_exits_1(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", "entity,g1,g2\na,0,0\nb,0,0\n")
        rc = main(["compute", "--panel", "2024=" + panel,
                   "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_missing_file_exits_1(self, tmp_path, capsys):
        rc = main(["compute", "--panel", "2024=" + str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_bad_panel_flag_exits_1(self, tmp_path, capsys):
        rc = main(["compute", "--panel", "whoops", "--out", str(tmp_path)])
        assert rc == 1
        assert "YEAR=PATH" in capsys.readouterr().err

    def test_bad_chart_kind_exits_1(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_3X2)
        rc = main(["compute", "--panel", "2024=" + panel,
                   "--out", str(tmp_path / "out"), "--charts", "pie"])
        assert rc == 1

    def test_charts_none_writes_tables_only(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_3X2)
        rc = main(["compute", "--panel", "2024=" + panel,
                   "--out", str(tmp_path / "out"), "--charts", "none"])
        assert rc == 0
        assert not list((tmp_path / "out").glob("*.svg"))
        assert (tmp_path / "out" / "method_agreement.csv").exists()

    def test_nonconvergence_exits_3(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_2X2)
        rc = main(["compute", "--panel", "2024=" + panel, "--method",
                   "iterative", "--max-steps", "40",
                   "--out", str(tmp_path / "out"), "--charts", "none"])
        assert rc == 3
        assert "did not reach" in capsys.readouterr().err

    def test_allow_nonconverged_continues(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_2X2)
        rc = main(["compute", "--panel", "2024=" + panel, "--method",
                   "iterative", "--max-steps", "40", "--allow-nonconverged",
                   "--out", str(tmp_path / "out"), "--charts", "none"])
        assert rc == 0
        assert (tmp_path / "out" / "ranks_D_s_2024.csv").exists()
        assert "did not converge" in capsys.readouterr().err

    def test_indicator_input(self, tmp_path, capsys):
        text = ("entity,category,indicator,value\n"
                "a,g1,k1,40\na,g1,k2,60\na,g2,k1,10\n"
                "b,g1,k1,20\nb,g2,k1,30\n")
        indicators = write(tmp_path, "ind.csv", text)
        rc = main(["compute", "--indicators", "2019=" + indicators,
                   "--out", str(tmp_path / "out"), "--charts", "none"])
        assert rc == 0
        rows = read_csv(tmp_path / "out" / "scores_entities_2019.csv")
        assert rows[1][0] == "a"
        assert rows[1][1] == "60.000000"  # mean(40, 60) + 10

    def test_four_year_fixture_with_maps(self, tmp_path, capsys, data_dir):
        rc = main([
            "compute",
            "--panel", f"2018={data_dir / 'panel_2018.csv'}",
            "--panel", f"2019={data_dir / 'panel_2019.csv'}",
            "--panel", f"2020={data_dir / 'panel_2020.csv'}",
            "--panel", f"2024={data_dir / 'panel_2024.csv'}",
            "--entity-map", f"2019->2020={data_dir / 'map_2019_2020.json'}",
            "--out", str(tmp_path / "out"),
            "--charts", "rank_bump,grouped_bars"])
        assert rc == 0
        bump = (tmp_path / "out" / "rank_bump_k_s.svg").read_text()
        assert bump.count('class="x-tick"') == 4
        assert (tmp_path / "out" / "grouped_bars_weights.svg").exists()


class TestCompare:
    def test_same_basis_rho_one(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", DISTINCT_3X2)
        rc = main(["compare", "k_s", "k_s", "--panel", "2024=" + panel])
        assert rc == 0
        out = capsys.readouterr().out
        assert "spearman rho (k_s vs k_s) = 1.000000" in out

    def test_ks_vs_ds_on_worked_2x2(self, tmp_path, capsys):
        # both bases rank entity 'a' first, so rho = 1
        panel = write(tmp_path, "p.csv", WORKED_2X2)
        rc = main(["compare", "k_s", "D_s", "--panel", "2024=" + panel,
                   "--method", "spectral"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "spearman rho (k_s vs D_s) = 1.000000" in out
        assert "score_k_s" in out

    def test_writes_side_by_side(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_3X2)
        rc = main(["compare", "k_s", "composite_mean",
                   "--panel", "2024=" + panel, "--out", str(tmp_path / "out")])
        assert rc == 0
        path = tmp_path / "out" / "compare_k_s_vs_composite_mean_2024.csv"
        rows = read_csv(path)
        assert rows[0] == ["entity", "score_k_s", "rank_k_s",
                           "score_composite_mean", "rank_composite_mean"]
        assert len(rows) == 4

    def test_mismatched_rosters_without_map_exit_1(self, tmp_path, capsys):
        a = write(tmp_path, "a.csv", WORKED_3X2)
        b = write(tmp_path, "b.csv", "entity,g1,g2\nx,2,0\ny,1,1\nz,0,2\n")
        rc = main(["compare", "k_s", "k_s", "--panel", "2018=" + a,
                   "--panel", "2024=" + b])
        assert rc == 1
        assert "one-to-one" in capsys.readouterr().err

    def test_across_years_with_rename_map(self, tmp_path, capsys):
        a = write(tmp_path, "a.csv", DISTINCT_3X2)
        b = write(tmp_path, "b.csv", "entity,g1,g2\naa,50,40\nb,30,20\nc,10,5\n")
        emap = write(tmp_path, "map.json",
                     '{"renames": [{"from": ["a"], "to": ["aa"]}]}')
        rc = main(["compare", "k_s", "k_s", "--panel", "2018=" + a,
                   "--panel", "2024=" + b,
                   "--entity-map", "2018->2024=" + emap])
        assert rc == 0
        assert "= 1.000000" in capsys.readouterr().out

    def test_three_panels_rejected(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", WORKED_3X2)
        rc = main(["compare", "k_s", "k_s", "--panel", "1=" + panel,
                   "--panel", "2=" + panel, "--panel", "3=" + panel])
        assert rc == 1


class TestValidate:
    def test_clean_fixture(self, tmp_path, capsys, data_dir):
        rc = main(["validate",
                   "--panel", f"2024={data_dir / 'panel_2024.csv'}"])
        assert rc == 0

    def test_out_of_range_cell_exit_1_with_coordinates(self, tmp_path, capsys):
        panel = write(tmp_path, "p.csv", "entity,g1,g2\na,10,20\nb,30,105\n")
        rc = main(["validate", "--panel", "2024=" + panel])
        assert rc == 1
        out = capsys.readouterr().out
        assert "row 3" in out and "g2" in out

    def test_high_missingness_warns_exit_0(self, tmp_path, capsys):
        rows = ["entity,g1,g2"]
        for i in range(36):
            g1 = "" if i < 30 else f"{40 + i}"
            rows.append(f"e{i:02d},{g1},{50 + i}")
        panel = write(tmp_path, "p.csv", "\n".join(rows) + "\n")
        rc = main(["validate", "--panel", "2024=" + panel])
        assert rc == 0
        out = capsys.readouterr().out
        assert "warning" in out and "0.833" in out

    def test_no_inputs_exit_1(self, capsys):
        rc = main(["validate"])
        assert rc == 1


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "panelrank.cli", "validate", "--panel",
             "x=does_not_exist.csv"],
            capture_output=True, text=True)
        assert result.returncode == 1

    def test_help(self):
        result = subprocess.run(
            [sys.executable, "-m", "panelrank.cli", "--help"],
            capture_output=True, text=True)
        assert result.returncode == 0
        assert "compute" in result.stdout
