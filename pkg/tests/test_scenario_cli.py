import os

import pytest

from flitnoc.cli import main
from flitnoc.scenario import (
    BUILTIN_SCENARIOS,
    ScenarioError,
    load_builtin,
    load_scenario,
    parse_scenario,
    run_scenario,
    validate_scenario,
)


MINIMAL_SIM = """
[network]
width = 1
height = 1
fifo_depth = 2

[cores]
core 0 at 0 0 NE
core 1 at 0 0 SW

[flows]
flow a from 0 to 1 size=fixed:2 rate=single_shot:3

[run]
mode = simulate
duration = 40
seed = 0
"""


class TestParser:
    def test_minimal_scenario_parses(self):
        sc = parse_scenario(MINIMAL_SIM, source="mini.scn")
        assert sc.mode == "simulate"
        assert len(sc.placements) == 2
        assert sc.flows[0]["id"] == "a"

    def test_error_carries_line_number(self):
        bad = MINIMAL_SIM.replace("core 1 at 0 0 SW", "core 1 at 0 0 XX")
        with pytest.raises(ScenarioError) as err:
            parse_scenario(bad, source="mini.scn")
        assert "mini.scn:9" in str(err.value)

    def test_unknown_section_rejected(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario("[nonsense]\n", source="x.scn")
        assert "x.scn:1" in str(err.value)

    def test_unknown_key_rejected(self):
        bad = MINIMAL_SIM.replace("seed = 0", "sneed = 0")
        with pytest.raises(ScenarioError):
            parse_scenario(bad, source="mini.scn")

    def test_empty_flow_list_rejected_on_validate(self):
        text = MINIMAL_SIM.split("[flows]")[0] + "[run]\nmode = simulate\nduration = 10\n"
        sc = parse_scenario(text, source="mini.scn")
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_missing_probe_flow_rejected(self):
        text = MINIMAL_SIM + "\n[probe]\nflow = ghost\nwarmup = 1\noffset = 0\n"
        sc = parse_scenario(text, source="mini.scn")
        with pytest.raises(ScenarioError):
            validate_scenario(sc)

    def test_flow_referencing_missing_core(self):
        bad = MINIMAL_SIM.replace("from 0 to 1", "from 0 to 9")
        sc = parse_scenario(bad, source="mini.scn")
        with pytest.raises(ScenarioError):
            validate_scenario(sc)


class TestBuiltins:
    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_builtin_parses_and_validates(self, name):
        sc = load_scenario(name)
        validate_scenario(sc)

    def test_builtin_equals_its_file(self, tmp_path):
        # Running a builtin is running its committed file.
        text = load_builtin("fig7_wcl")
        path = tmp_path / "copy.scn"
        path.write_text(text)
        by_name = run_scenario(load_scenario("fig7_wcl"))
        by_file = run_scenario(load_scenario(str(path)))
        strip = lambda rows: [
            (r.flow, r.max_latency_cycles, r.max_header_latency_cycles, r.wcl_cycles)
            for r in rows
        ]
        assert strip(by_name.flow_rows) == strip(by_file.flow_rows)

    def test_fig7_validate_reports_profile(self):
        info = validate_scenario(load_scenario("fig7_wcl"))
        assert info["n_per_hop"] == [1, 2, 3]
        assert info["k"] == 5
        assert info["h_path"] == 3
        assert info["wcl"] == 62


class TestCli:
    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out.split()
        assert out == list(BUILTIN_SCENARIOS)

    def test_validate_exit_codes(self, tmp_path, capsys):
        assert main(["validate", "fig7_wcl"]) == 0
        capsys.readouterr()
        bad = tmp_path / "bad.scn"
        bad.write_text("[network]\nwidth = banana\n")
        assert main(["validate", str(bad)]) == 1
        assert "bad.scn:2" in capsys.readouterr().err

    def test_missing_scenario_is_usage_error(self, capsys):
        assert main(["run", "no_such_scenario"]) == 1

    def test_run_writes_csv_and_figures(self, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["run", "fig5_analytic", "--output-dir", str(out)]) == 0
        files = sorted(os.listdir(out))
        assert files == ["fig5_analytic_analytic.csv", "fig5_analytic_analytic.png"]

    def test_no_plot_skips_figures(self, tmp_path):
        out = tmp_path / "results"
        assert main(["run", "fig5_analytic", "--output-dir", str(out), "--no-plot"]) == 0
        assert sorted(os.listdir(out)) == ["fig5_analytic_analytic.csv"]

    def test_run_fig7_summary(self, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["run", "fig7_wcl", "--output-dir", str(out)]) == 0
        text = capsys.readouterr().out
        assert "wcl=62" in text
        assert "header=12" in text
        assert "packet=62" in text
        assert "PASS" in text

    def test_csv_sorted_by_load_then_flow(self, tmp_path):
        out = tmp_path / "results"
        main(["run", "fig7_wcl", "--output-dir", str(out), "--no-plot"])
        with open(out / "fig7_wcl_simulate.csv") as fh:
            rows = fh.read().splitlines()[1:]
        flows = [r.split(",")[3] for r in rows]
        assert flows == sorted(flows)

    def test_bound_violation_exits_with_code_2(self, tmp_path, capsys):
        # A destination that refuses to read for far longer than the
        # interface allowance pushes a packet past its bound; the run must
        # finish, report it and signal via the exit code.
        scn = tmp_path / "stalled.scn"
        scn.write_text(
            "[network]\n"
            "width = 1\nheight = 1\nfifo_depth = 2\n"
            "rx_prefill = 2\nrx_stall_until = 60\n"
            "[cores]\n"
            "core 0 at 0 0 NE\ncore 1 at 0 0 SW\n"
            "[flows]\n"
            "flow a from 0 to 1 size=fixed:4 rate=single_shot:0\n"
            "[run]\nmode = simulate\nduration = 120\nseed = 0\n"
        )
        out = tmp_path / "results"
        code = main(["run", str(scn), "--output-dir", str(out), "--no-plot"])
        assert code == 2
        assert "INVARIANT VIOLATION" in capsys.readouterr().err
