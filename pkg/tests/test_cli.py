import json
import math

import numpy as np
import pytest

from cbmdetect.cli import VERB_MAP, main
from cbmdetect.io import read_graph_csv, write_stream_csv
from cbmdetect.model import TernaryGraph, pair_indices, parse_labels

POST_CONFIG = {
    "scenario": {
        "n": 10,
        "p": 0.8,
        "zeta": 0.1,
        "pre": "balanced",
        "post": {"flip": [0, 1]},
        "nu": 1,
    },
    "detector": {"kind": "LDP", "b": 1.0, "epsilon": 2.0, "estimator": "spectral"},
    "truncation": 6,
    "trials": 2,
}


def _write_config(tmp_path, payload=None):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(payload or POST_CONFIG))
    return str(path)


def _post_stream(tmp_path, n=6, count=3):
    labels = parse_labels("+" * (n // 2) + "-" * (n - n // 2))
    labels[0] = -1
    i, j = pair_indices(n)
    pattern = (labels[i] * labels[j]).astype(np.int8)
    graphs = [TernaryGraph(n, pattern.copy()) for _ in range(count)]
    path = tmp_path / "stream.csv"
    write_stream_csv(graphs, path)
    return str(path)


def test_verbs_registered():
    assert set(VERB_MAP) == {
        "generate", "perturb", "recover", "detect", "simulate", "threshold", "ingest",
    }


def test_generate_writes_graph(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code = main(
        ["generate", "--n", "8", "--p", "0.7", "--zeta", "0.1", "--seed", "4", "--out", str(out)]
    )
    assert code == 0
    graph = read_graph_csv(out)
    assert graph.n == 8
    text = capsys.readouterr().out
    assert text.startswith(f"wrote {out}: n=8 edges=")
    assert f"edges={graph.edge_count}" in text


def test_generate_reruns_byte_identical(tmp_path):
    args = ["generate", "--n", "12", "--a", "3.0", "--zeta", "0.2", "--seed", "9"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_generate_flag_validation(tmp_path, capsys):
    out = str(tmp_path / "g.csv")
    base = ["generate", "--n", "8", "--zeta", "0.1", "--seed", "1", "--out", out]
    assert main(base) == 2  # neither --a nor --p
    assert main(base + ["--a", "2", "--p", "0.5"]) == 2
    assert main(base + ["--p", "0.5", "--labels", "++-"]) == 2
    assert "error:" in capsys.readouterr().err


def test_pipeline_generate_perturb_recover(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    noisy = tmp_path / "noisy.csv"
    labels = "++++----"
    assert (
        main(
            [
                "generate", "--n", "8", "--p", "1.0", "--zeta", "1e-9",
                "--labels", labels, "--seed", "0", "--out", str(raw),
            ]
        )
        == 0
    )
    assert (
        main(["perturb", "--in", str(raw), "--eps-log-n", "--seed", "1", "--out", str(noisy)])
        == 0
    )
    capsys.readouterr()
    assert main(["recover", "--in", str(noisy), "--estimator", "ml", "--seed", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == labels
    assert lines[1].startswith("objective=") and "status=converged" in lines[1]


def test_recover_degenerate_graph_exits_one(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("n=6\n")
    assert main(["recover", "--in", str(empty), "--seed", "0"]) == 1
    assert "status=degenerate" in capsys.readouterr().out


def test_perturb_requires_epsilon(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("n=3\n0,1,1\n")
    out = str(tmp_path / "noisy.csv")
    assert main(["perturb", "--in", str(raw), "--seed", "1", "--out", out]) == 2
    assert (
        main(
            ["perturb", "--in", str(raw), "--eps", "1", "--eps-log-n", "--seed", "1", "--out", out]
        )
        == 2
    )


def test_detect_stops_on_stream(tmp_path, capsys):
    config = {
        "scenario": {
            "n": 6, "p": 0.8, "zeta": 0.1,
            "pre": "balanced", "post": {"flip": [0]}, "nu": 1,
        },
        "detector": {"kind": "LDP", "b": 5.0, "epsilon": 1e6},
    }
    stream = _post_stream(tmp_path)
    traj = tmp_path / "traj.csv"
    code = main(
        [
            "detect", "--config", _write_config(tmp_path, config),
            "--stream", stream, "--seed", "0", "--out", str(traj),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "stopped=True" in out
    header = traj.read_text().splitlines()[0]
    assert header == "t,stat,noisy_stat,stopped,hamming_est_vs_post"


def test_detect_no_alarm_exits_one(tmp_path, capsys):
    config = {
        "scenario": {
            "n": 6, "p": 0.8, "zeta": 0.1,
            "pre": "balanced", "post": {"flip": [0]}, "nu": 1,
        },
        "detector": {"kind": "LDP", "b": 1e6, "epsilon": 1e6},
    }
    code = main(
        [
            "detect", "--config", _write_config(tmp_path, config),
            "--stream", _post_stream(tmp_path), "--seed", "0",
        ]
    )
    assert code == 1
    assert "stopped=False" in capsys.readouterr().out


def test_detect_mode_override_is_case_insensitive(tmp_path):
    config = dict(POST_CONFIG, detector={"b": 1.0, "epsilon": 2.0, "estimator": "spectral"})
    path = _write_config(tmp_path, config)
    for mode in ("ldp", "LDP"):
        code = main(
            ["detect", "--config", path, "--mode", mode, "--truncation", "4", "--seed", "0"]
        )
        assert code in (0, 1)


def test_detect_requires_detector_fields(tmp_path, capsys):
    config = dict(POST_CONFIG, detector={"b": 1.0, "epsilon": 2.0})
    assert main(["detect", "--config", _write_config(tmp_path, config), "--seed", "0"]) == 2
    assert "kind" in capsys.readouterr().err


def test_simulate_delay_summary(tmp_path, capsys):
    code = main(["simulate", "--config", _write_config(tmp_path), "--seed", "2"])
    assert code == 0
    out1 = capsys.readouterr().out
    summary = json.loads(out1)
    assert set(summary) == {"censored_fraction", "delay_ci", "mean_delay", "trials"}
    assert summary["trials"] == 2
    assert main(["simulate", "--config", _write_config(tmp_path), "--seed", "2"]) == 0
    assert capsys.readouterr().out == out1


def test_simulate_arl_summary(tmp_path, capsys):
    config = json.loads(json.dumps(POST_CONFIG))
    config["scenario"]["nu"] = "inf"
    config["detector"]["b"] = 0.2
    code = main(["simulate", "--config", _write_config(tmp_path, config), "--seed", "3"])
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"arl_estimate", "censored_fraction", "trials"}
    # under the pre-change law the statistic mostly sits at 0, so short
    # truncated runs are all censored and the CLI flags that with exit 1
    assert code == (1 if summary["censored_fraction"] >= 1.0 else 0)
    assert summary["arl_estimate"] > 0


def test_simulate_fully_censored_exits_one(tmp_path, capsys):
    config = json.loads(json.dumps(POST_CONFIG))
    config["detector"]["estimator"] = "fixed"
    config["truncation"] = 3
    code = main(["simulate", "--config", _write_config(tmp_path, config), "--seed", "0"])
    assert code == 1
    assert json.loads(capsys.readouterr().out)["censored_fraction"] == 1.0


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["threshold", "--thm", "1", "--n", "100", "--eps-log-n"], 1.1335578),
        (["threshold", "--thm", "3", "--n", "50", "--eps-log-n"], 32.0),
        (["threshold", "--thm", "5", "--n", "100", "--a", "5", "--zeta", "0.1"], 0.0205058),
        (
            ["threshold", "--thm", "2", "--gamma", "10", "--zeta", "0.1", "--eps", "40"],
            math.log(10.0) - math.log(0.8478191436451686),
        ),
    ],
)
def test_threshold_values(capsys, argv, expected):
    assert main(argv) == 0
    np.testing.assert_allclose(float(capsys.readouterr().out), expected, atol=1e-6)


def test_threshold_json_report(capsys):
    assert main(["threshold", "--thm", "7", "--n", "100", "--eps", "0.02", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["name"] == "minimum-window"
    assert payload["inputs"] == {"n": 100, "epsilon": 0.02}
    assert payload["value"] > 0


def test_threshold_infeasible_exits_one(capsys):
    code = main(["threshold", "--thm", "2", "--gamma", "10", "--zeta", "0.1", "--eps", "10"])
    assert code == 1
    assert "infeasible" in capsys.readouterr().err


def test_threshold_missing_inputs(capsys):
    assert main(["threshold", "--thm", "1", "--n", "100"]) == 2
    assert main(["threshold", "--thm", "5", "--n", "100"]) == 2
    assert "error:" in capsys.readouterr().err


def test_ingest_summary(tmp_path, capsys):
    path = _post_stream(tmp_path, n=6, count=2)
    assert main(["ingest", "--in", path]) == 0
    assert capsys.readouterr().out.strip() == "graphs=2 n=6 edges=30"
    empty = tmp_path / "empty.csv"
    empty.write_text("n=4\n")
    assert main(["ingest", "--in", str(empty)]) == 0
    assert capsys.readouterr().out.strip() == "graphs=0"


def test_ingest_missing_file_exits_two(tmp_path, capsys):
    assert main(["ingest", "--in", str(tmp_path / "nope.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_json_config_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["detect", "--config", str(bad), "--seed", "0"]) == 2


def test_usage_errors_exit_two(capsys):
    assert main(["unknown-verb"]) == 2
    assert main(["generate", "--n", "8"]) == 2
    capsys.readouterr()
