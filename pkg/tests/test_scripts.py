import json
import subprocess
import sys
from pathlib import Path

from monocluster_core.core.cluster_graph import ClusterGraph, Link
from monocluster_core.core.mayer_lattice import Cell, MayerBox
from monocluster_core.core.polymer import Polymer

REPO = Path(__file__).resolve().parents[1]


def run_script(name, *args, cwd):
    script = REPO / "scripts" / name
    return subprocess.run([sys.executable, str(script), *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def test_validate_config_ok(tmp_path):
    cfg = tmp_path / "run_config.json"
    cfg.write_text(json.dumps({"dim": 1, "sources": [[0.5]]}), encoding="utf-8")
    proc = run_script("validate_config.py", cfg, cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "Validation OK" in proc.stdout


def test_validate_config_exit_codes(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert run_script("validate_config.py", broken, cwd=tmp_path).returncode == 2

    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
    assert run_script("validate_config.py", extra, cwd=tmp_path).returncode == 3

    # schema allows any point length, the dimension check does not
    mismatch = tmp_path / "mismatch.json"
    mismatch.write_text(json.dumps({"dim": 2, "sources": [[0.5]]}), encoding="utf-8")
    proc = run_script("validate_config.py", mismatch, cwd=tmp_path)
    assert proc.returncode == 4
    assert "dimension" in proc.stdout


def test_inspect_graph(tmp_path):
    c0, c1 = Cell((0,)), Cell((1,))
    g = ClusterGraph(Polymer({MayerBox(c0, 0)}), [Link(MayerBox(c0, 0), MayerBox(c1, 0))])
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(g.to_dict()), encoding="utf-8")

    proc = run_script("inspect_graph.py", path, "--h", "0.5", cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "cluster-roof" in proc.stdout
    assert "sigma: {1: 0}" in proc.stdout


def test_inspect_graph_reports_bad_files(tmp_path):
    path = tmp_path / "graph.json"
    path.write_text(json.dumps({"links": []}), encoding="utf-8")
    assert run_script("inspect_graph.py", path, cwd=tmp_path).returncode == 1
