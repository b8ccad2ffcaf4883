import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from liouville_functor.cli import main

ROOT = Path(__file__).resolve().parents[1]

TADPOLE = {"vertices": ["v"], "edges": [["v", "v"]], "tails": [{"vertex": "v", "number": 1}]}
BLOCK4 = ["block4", "--b", "1", "--d1", "1/3", "--d2", "2/5", "--d3", "3/7", "--d4", "5/11", "--order", "3"]


def run_json(capsys, *argv):
    status = main([*argv, "--json", "--no-timing"])
    out = capsys.readouterr().out
    return status, json.loads(out), out


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_module(*argv):
    return subprocess.run(
        [sys.executable, "-m", "liouville_functor.cli", *argv],
        capture_output=True,
        text=True,
        check=False,
        cwd=ROOT,
    )


# -- in-process ------------------------------------------------------------------------------

def test_gram_level_one(capsys):
    status, report, _ = run_json(capsys, "gram", "--level", "1", "--b", "1", "--delta", "3/2")
    assert status == 0
    assert report["command"] == "gram"
    assert report["result"] == [["3"]]
    assert report["meta"] == {"basis": ["L_-1"], "central_charge": "25"}
    assert report["timing_ms"] is None
    assert "error" not in report


def test_char_coefficients(capsys):
    status, report, _ = run_json(capsys, "char", "--delta", "1/2", "--order", "4")
    assert status == 0
    assert report["result"]["coefficients"] == ["1", "1", "2", "3", "5"]
    assert report["inputs"] == {"delta": "1/2", "order": 4}


def test_timing_is_reported_by_default(capsys):
    assert main(["char", "--delta", "1", "--order", "2", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert isinstance(report["timing_ms"], float)


def test_weight_from_momentum(capsys):
    status, report, _ = run_json(capsys, "weight", "--b", "1", "--momentum", "1")
    assert status == 0
    assert report["result"]["delta"] == "2"
    assert report["result"]["c"] == "25"


def test_block4_first_coefficient(capsys):
    status, report, _ = run_json(capsys, *BLOCK4, "--dbeta", "7/4")
    assert status == 0
    result = report["result"]
    assert result["delta_beta"] == "7/4"
    assert result["coefficients"][0] == "1"
    beta, d1, d2, d3, d4 = Fraction(7, 4), Fraction(1, 3), Fraction(2, 5), Fraction(3, 7), Fraction(5, 11)
    assert Fraction(result["coefficients"][1]) == (beta + d2 - d1) * (beta + d3 - d4) / (2 * beta)


def test_block4_grid_returns_one_series_per_weight(capsys):
    status, report, _ = run_json(capsys, *BLOCK4, "--dbeta", "3/2,7/4,5/2", "--threads", "2")
    assert status == 0
    assert [s["delta_beta"] for s in report["result"]] == ["3/2", "7/4", "5/2"]


def test_graphs_validate_describes_the_curve(capsys, tmp_path):
    status, report, _ = run_json(capsys, "graphs", "validate", write(tmp_path, "g.json", TADPOLE))
    assert status == 0
    assert report["command"] == "graphs validate"
    assert report["result"]["genus"] == 1
    assert report["result"]["trivalent"] is True


def test_graphs_enumerate(capsys):
    status, report, _ = run_json(capsys, "graphs", "enumerate", "--genus", "0", "--tails", "4")
    assert status == 0
    assert report["result"]["count"] == 3


def test_malformed_graph_names_the_key(capsys, tmp_path):
    bad = {"vertices": ["v"], "edges": [["v", "v"]], "tails": [{"vertex": "v"}]}
    status, report, _ = run_json(capsys, "graphs", "validate", write(tmp_path, "g.json", bad))
    assert status == 2
    assert report["error"]["type"] == "InputError"
    assert "tails.0.number" in report["error"]["message"]
    assert report["result"] is None


def test_unknown_keys_are_rejected(capsys, tmp_path):
    bad = dict(TADPOLE, colour="red")
    status, report, _ = run_json(capsys, "graphs", "validate", write(tmp_path, "g.json", bad))
    assert status == 2
    assert "colour" in report["error"]["message"]


def test_missing_file_is_an_input_error(capsys, tmp_path):
    status, report, _ = run_json(capsys, "graphs", "validate", str(tmp_path / "nope.json"))
    assert status == 2


def test_invalid_graph_is_a_domain_error(capsys, tmp_path):
    unstable = {"vertices": ["v"], "edges": [], "tails": [{"vertex": "v", "number": 1}, {"vertex": "v", "number": 2}]}
    status, report, _ = run_json(capsys, "graphs", "validate", write(tmp_path, "g.json", unstable))
    assert status == 1
    assert report["error"]["type"] == "GraphError"
    assert report["error"]["detail"]["invariant"] == "stability"


def test_singular_internal_weight_is_a_domain_error(capsys):
    status, report, _ = run_json(capsys, *BLOCK4, "--dbeta", "0")
    assert status == 1
    assert report["error"]["type"] != "InputError"


def test_bad_rational_argument_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["gram", "--level", "1", "--b", "1", "--delta", "1/0"])
    assert info.value.code == 2


def test_low_precision_is_rejected(capsys):
    status, report, _ = run_json(capsys, "char", "--delta", "1", "--order", "2", "--precision", "3")
    assert status == 2


def test_schottky_verify_extends_tails(capsys, tmp_path):
    graph = write(tmp_path, "g.json", TADPOLE)
    status, report, _ = run_json(capsys, "schottky", "verify", "--graph", graph, "--cutoff", "2", "--samples", "5")
    assert status == 0
    result = report["result"]
    assert result["relation"] == "pass"
    assert result["extended"] is True
    assert result["generators"] == 2


def test_wave_reads_a_block4_report(capsys, tmp_path):
    _, report, out = run_json(capsys, *BLOCK4, "--dbeta", "7/4")
    coeffs = tmp_path / "block.json"
    coeffs.write_text(out)
    status, wave, _ = run_json(capsys, "wave", "--coeffs", str(coeffs), "--q", "0.001,0")
    assert status == 0
    assert wave["result"]["initial_value"] == "1"
    assert abs(float(wave["result"]["value"]["re"]) - 1) < 0.01


def test_phase_of_a_half_twist(capsys, tmp_path):
    word = write(tmp_path, "word.json", {"moves": [{"kind": "half_twist", "edge": 0}]})
    beta = write(tmp_path, "beta.json", {"0": "1/2"})
    status, report, _ = run_json(capsys, "phase", "--word", word, "--beta", beta)
    assert status == 0
    assert report["result"]["turns"] == "1/4"
    assert abs(float(report["result"]["phase"]["im"]) - 1) < 1e-30
    assert abs(float(report["result"]["phase"]["re"])) < 1e-30


def test_moves(capsys):
    status, report, _ = run_json(capsys, "moves", "--genus", "1", "--tails", "2")
    assert status == 0
    assert report["result"]["connected"] is True
    assert len(report["result"]["nodes"]) == 2


def test_human_output_renders_a_table(capsys):
    assert main(["char", "--delta", "1", "--order", "3"]) == 0
    assert "c_n" in capsys.readouterr().out


# -- subprocess golden runs -----------------------------------------------------------------

def test_module_entry_point_is_deterministic_across_thread_counts():
    args = [*BLOCK4, "--dbeta", "3/2,7/4", "--json", "--no-timing"]
    one = run_module(*args, "--threads", "1")
    eight = run_module(*args, "--threads", "8")
    again = run_module(*args, "--threads", "1")
    assert one.returncode == 0, one.stderr
    assert one.stdout == eight.stdout == again.stdout


def test_report_is_canonical_json():
    proc = run_module("gram", "--level", "2", "--b", "2/3", "--delta", "1/5", "--json", "--no-timing")
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert json.dumps(report, sort_keys=True, indent=2) + "\n" == proc.stdout
    assert set(report) == {"command", "inputs", "result", "timing_ms", "meta"}


def test_module_exit_status_for_bad_input(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    proc = run_module("graphs", "validate", str(path), "--json")
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["error"]["type"] == "InputError"


def test_pants_glues_the_s_channel(capsys, tmp_path):
    graph = {
        "vertices": ["a", "b"],
        "edges": [["a", "b"]],
        "tails": [{"vertex": "a", "number": 1}, {"vertex": "a", "number": 2},
                  {"vertex": "b", "number": 3}, {"vertex": "b", "number": 4}],
    }
    status, report, _ = run_json(
        capsys,
        "pants", "--b", "1", "--order", "2",
        "--graph", write(tmp_path, "g.json", graph),
        "--beta", write(tmp_path, "beta.json", {"0": "7/4"}),
        "--externals", write(tmp_path, "ext.json", {"1": "1/3", "2": "2/5", "3": "3/7", "4": "5/11"}),
    )
    assert status == 0
    assert report["meta"] == {"genus": 0, "tails": 4}
    assert report["result"]["betas"] == ["7/4"]
    terms = {tuple(t["exponents"]): Fraction(t["coefficient"]) for t in report["result"]["series"]["terms"]}
    beta, d1, d2, d3, d4 = Fraction(7, 4), Fraction(1, 3), Fraction(2, 5), Fraction(3, 7), Fraction(5, 11)
    assert terms[(0,)] == 1
    assert terms[(1,)] == (beta + d2 - d1) * (beta + d3 - d4) / (2 * beta)


def test_pants_rejects_a_graph_that_is_not_trivalent(capsys, tmp_path):
    graph = {"vertices": ["v"], "tails": [{"vertex": "v", "number": n} for n in (1, 2, 3, 4)]}
    status, report, _ = run_json(
        capsys,
        "pants", "--b", "1", "--order", "1",
        "--graph", write(tmp_path, "g.json", graph),
        "--beta", write(tmp_path, "beta.json", {}),
        "--externals", write(tmp_path, "ext.json", {"1": "1", "2": "1", "3": "1", "4": "1"}),
    )
    assert status == 1
    assert report["error"]["type"] == "MoveError"
