# tests/test_cli.py
import json

import pandas as pd
import pytest

from modnet import __version__
from modnet.app import main
from modnet.config import resolve_config
from modnet.design_model import DesignSpace
from modnet.network import load_network_dir
from modnet.services import file_sha256
from modnet.solver_kernel import read_model


@pytest.fixture
def corridor_dir(tmp_path):
    target = tmp_path / "corridor"
    assert main(["generate", "corridor", str(target)]) == 0
    return target


def _design(network_dir, out, *extra):
    config = str(network_dir / "config.json")
    return main(["--config", config, "--jobs", "1", "design", str(network_dir), "--out", str(out), *extra])


def _space_size(network_dir) -> int:
    design_config, _ = resolve_config(network_dir / "config.json")
    return DesignSpace(load_network_dir(network_dir), design_config).size


# --- generate / validate ---

def test_generate_writes_network_and_config(corridor_dir):
    for name in ("nodes.csv", "links.csv", "lines.csv", "demand.csv", "config.json"):
        assert (corridor_dir / name).is_file()
    config = json.loads((corridor_dir / "config.json").read_text(encoding="utf-8"))
    assert config["design"]["matching_coefficient"] == 0.05


def test_validate_reports_counts(corridor_dir, capsys):
    assert main(["--config", str(corridor_dir / "config.json"), "validate", str(corridor_dir)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["road_connected"] is True
    assert report["counts"]["lines"] == 2
    assert report["design_binaries"] == _space_size(corridor_dir)


def test_missing_demand_file_exits_with_data_error(corridor_dir, capsys):
    (corridor_dir / "demand.csv").unlink()
    assert main(["validate", str(corridor_dir)]) == 2
    assert "demand.csv" in capsys.readouterr().err


def test_missing_network_directory(tmp_path):
    assert main(["validate", str(tmp_path / "nowhere")]) == 2


# --- design ---

def test_design_writes_every_output(corridor_dir, tmp_path):
    out = tmp_path / "out"
    assert _design(corridor_dir, out) == 0
    for name in ("design.json", "trace.csv", "flows.csv", "waits.csv", "summary.json", "routes.csv", "manifest.json"):
        assert (out / name).is_file()
    trace = pd.read_csv(out / "trace.csv")
    assert trace["gap_pct"].iloc[-1] <= 1e-3
    design = json.loads((out / "design.json").read_text(encoding="utf-8"))
    assert design["status"] == "optimal"
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "design"
    assert manifest["version"] == __version__
    nodes = str(corridor_dir / "nodes.csv")
    assert manifest["input_hashes"][nodes] == file_sha256(nodes)
    assert manifest["config"]["design"]["matching_coefficient"] == 0.05


def test_design_is_deterministic(corridor_dir, tmp_path):
    assert _design(corridor_dir, tmp_path / "a") == 0
    assert _design(corridor_dir, tmp_path / "b") == 0
    first = (tmp_path / "a" / "flows.csv").read_bytes()
    assert first == (tmp_path / "b" / "flows.csv").read_bytes()
    assert (tmp_path / "a" / "design.json").read_text() == (tmp_path / "b" / "design.json").read_text()


def test_methods_agree(corridor_dir, tmp_path):
    objectives = {}
    for method in ("classic", "enhanced", "monolith"):
        assert _design(corridor_dir, tmp_path / method, "--method", method) == 0
        payload = json.loads((tmp_path / method / "design.json").read_text(encoding="utf-8"))
        objectives[method] = payload["objective"]
    assert objectives["classic"] == pytest.approx(objectives["monolith"], rel=1e-6)
    assert objectives["enhanced"] == pytest.approx(objectives["monolith"], rel=1e-6)


def test_method_alias_and_multi_cut_token(corridor_dir, tmp_path):
    assert _design(corridor_dir, tmp_path / "mono", "--method", "gurobi-style-monolith") == 0
    assert _design(corridor_dir, tmp_path / "multi", "--method", "enhanced", "--cuts", "disagg,clique-cover,multi") == 0
    mono = json.loads((tmp_path / "mono" / "design.json").read_text(encoding="utf-8"))
    multi = json.loads((tmp_path / "multi" / "design.json").read_text(encoding="utf-8"))
    assert multi["objective"] == pytest.approx(mono["objective"], rel=1e-6)
    manifest = json.loads((tmp_path / "multi" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["benders"]["multiple_solutions"] == 2
    assert json.loads((tmp_path / "mono" / "manifest.json").read_text(encoding="utf-8"))["config"]["benders"]["method"] == "monolith"


def test_pool_size_overrides_the_multi_token(corridor_dir, tmp_path):
    out = tmp_path / "out"
    assert _design(corridor_dir, out, "--cuts", "disagg,multi", "--pool-size", "1") == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["benders"]["multiple_solutions"] == 1


def test_time_limit_exits_3_with_outputs(corridor_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert _design(corridor_dir, out, "--time-limit", "0.000001") == 3
    design = json.loads((out / "design.json").read_text(encoding="utf-8"))
    assert design["status"] == "time_limit"
    assert (out / "trace.csv").is_file()
    assert "time_limit" in capsys.readouterr().err


def test_dump_model_can_be_read_back(corridor_dir, tmp_path):
    dump = tmp_path / "model.txt"
    assert _design(corridor_dir, tmp_path / "out", "--dump-model", str(dump), "--cuts", "none") == 0
    model = read_model(dump)
    assert len(model.binaries) == _space_size(corridor_dir)
    assert model.num_rows > 0


def test_iteration_limit_exits_3_with_outputs(tmp_path, capsys):
    target = tmp_path / "triangle"
    assert main(["generate", "triangle", str(target)]) == 0
    out = tmp_path / "out"
    assert _design(target, out, "--max-iterations", "1") == 3
    assert (out / "design.json").is_file()
    assert (out / "trace.csv").is_file()
    assert "iteration_limit" in capsys.readouterr().err


# --- assign ---

def test_assign_reproduces_the_design_objective(corridor_dir, tmp_path):
    design_out = tmp_path / "design"
    assert _design(corridor_dir, design_out) == 0
    out = tmp_path / "assign"
    code = main(["--config", str(corridor_dir / "config.json"), "assign", str(corridor_dir),
                 "--design", str(design_out / "design.json"), "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    design = json.loads((design_out / "design.json").read_text(encoding="utf-8"))
    assert summary["objective"] == pytest.approx(design["objective"], rel=1e-6)
    assert sum(summary["mode_shares"].values()) == pytest.approx(100.0)


def test_assign_rejects_unknown_lines(corridor_dir, tmp_path):
    bad = tmp_path / "design.json"
    bad.write_text(json.dumps({"frequencies": {"L9": 4.0}, "fleets": {}}), encoding="utf-8")
    assert main(["assign", str(corridor_dir), "--design", str(bad), "--out", str(tmp_path / "o")]) == 2


# --- baseline / compare / sweep ---

def test_baseline_and_infeasible_budget(corridor_dir, tmp_path):
    config = str(corridor_dir / "config.json")
    assert main(["--config", config, "--jobs", "1", "baseline", str(corridor_dir), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "baseline.json").is_file()
    code = main(["--config", config, "--jobs", "1", "baseline", str(corridor_dir),
                 "--bus-budget", "0", "--out", str(tmp_path / "b0")])
    assert code == 2
    summary = json.loads((tmp_path / "b0" / "baseline.json").read_text(encoding="utf-8"))
    assert summary["status"] == "infeasible"


def test_compare_writes_both_scenarios(corridor_dir, tmp_path):
    out = tmp_path / "cmp"
    assert main(["--config", str(corridor_dir / "config.json"), "--jobs", "1", "compare", str(corridor_dir),
                 "--out", str(out)]) == 0
    report = json.loads((out / "comparison.json").read_text(encoding="utf-8"))
    assert set(report["scenarios"]) == {"integrated", "baseline"}


def test_sweep_writes_grid(corridor_dir, tmp_path):
    out = tmp_path / "sweep"
    code = main(["--config", str(corridor_dir / "config.json"), "--jobs", "1", "sweep", str(corridor_dir),
                 "--buses", "4,8", "--vehicles", "0,30", "--out", str(out)])
    assert code == 0
    grid = pd.read_csv(out / "grid.csv")
    assert len(grid) == 4
    assert set(grid["status"]) == {"optimal"}


# --- usage ---

def test_version_exits_zero(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_missing_command_is_a_usage_error():
    assert main([]) == 1


@pytest.mark.parametrize("argv", [["design"], ["design", "x", "--cuts", "bogus"], ["frobnicate"], ["--jobs", "0", "validate", "x"]])
def test_bad_usage_exits_one(argv):
    assert main(argv) == 1


def test_bad_budget_list_exits_two(corridor_dir, tmp_path):
    code = main(["sweep", str(corridor_dir), "--buses", "4,x", "--vehicles", "0", "--out", str(tmp_path / "s")])
    assert code == 2
