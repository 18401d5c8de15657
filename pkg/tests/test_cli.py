import csv
import io
import json
import pathlib

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import binary_entropy
from demonwork import cli, states, workx
from demonwork.qcore import BlochDir
from golden_runs import GOLDEN_RUNS, PI4

GOLDEN = pathlib.Path(__file__).parent / "golden"


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema: ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_outputs(name):
    expected = (GOLDEN / f"{name}.txt").read_text()
    assert cli.run(cli.load_config(GOLDEN_RUNS[name])) == expected


def test_every_command_has_a_golden_run():
    assert set(GOLDEN_RUNS) == set(cli.COMMANDS)


def test_rerun_byte_identical(tmp_path, capsys):
    argv = ["work2", "--mu", "0.9", "--phi", "0.8", "--rate", "270", "--duration", "30", "--seed", "5",
            "--resamples", "200"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    row = parse_csv(a.read_text())[0]
    assert float(row["sigma_prop"]) == pytest.approx(float(row["sigma_mc"]), rel=0.3)


def test_work2_examples(capsys):
    code, out, _ = run_cli(["work2", "--mu", "1", "--phi", "0.7854"], capsys)
    row = parse_csv(out)[0]
    assert code == 0 and float(row["W"]) == pytest.approx(1.0, abs=1e-5) and row["witnessed"] == "true"
    row = parse_csv(run_cli(["work2", "--mu", "0", "--phi", "0.7854"], capsys)[1])[0]
    assert float(row["W"]) == 0 and row["witnessed"] == "false"


def test_degrees_flag(capsys):
    rad = parse_csv(run_cli(["work2", "--mu", "0.8", "--phi", str(np.pi / 5)], capsys)[1])[0]
    deg = parse_csv(run_cli(["work2", "--mu", "0.8", "--phi", "36", "--degrees"], capsys)[1])[0]
    assert rad["W"] == deg["W"]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mu": 0.5, "phi": 0.7853981634, "format": "json"}))
    out = json.loads(run_cli(["tangle", "--config", str(cfg)], capsys)[1])
    assert out["schema"] == "tangle/1" and out["report"]["mu"] == 0.5
    out = json.loads(run_cli(["tangle", "--config", str(cfg), "--mu", "1"], capsys)[1])
    assert out["report"]["T"] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "argv",
    [
        ["work2", "--mu", "1.5", "--phi", "0.3"],
        ["work2", "--phi", "0.3"],
        ["work2", "--mu", "1", "--phi", "0.3", "--rate", "100", "--duration", "1"],
        ["work2", "--mu", "1", "--phi", "0.3", "--rate", "100"],
        ["simulate-counts", "--mu", "1", "--phi", "0.3"],
        ["fig3", "--points", "1"],
        ["tangle", "--mu", "1", "--phi", "0.3", "--config", "/nonexistent.json"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    code, out, err = run_cli(argv, capsys)
    assert code == cli.EXIT_CONFIG and out == "" and "error" in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mu": 0.5, "colour": "red"}))
    assert run_cli(["tangle", "--config", str(cfg)], capsys)[0] == cli.EXIT_CONFIG


def test_numerical_failure_exit_3(monkeypatch, capsys):
    def boom(cfg):
        raise FloatingPointError("overflow")

    monkeypatch.setitem(cli.COMMANDS, "tangle", (boom, ""))
    assert run_cli(["tangle", "--mu", "1", "--phi", "0.3"], capsys)[0] == cli.EXIT_NUMERIC


def test_mode_aliases():
    assert cli.load_config(["work3", "--mode", "adaptive"]).mode == "adaptive-v"
    with pytest.raises(SystemExit):
        cli.load_config(["work3", "--mode", "best"])


def test_table1_verdicts_self_consistent():
    rows = parse_csv(cli.run(cli.load_config(["table1"])))
    assert len(rows) == 16
    for r in rows:
        w, s = float(r["W_model"]), float(r["S_model"])
        assert (r["W_model_witnessed"] == "true") == (w > 0.442695)
        assert (r["S_model_violated"] == "true") == (s > 2)
        assert (r["W_agree"] == "true") == ((w > 0.442695) == (r["W_measured_bold"] == "true"))
    first = rows[0]
    assert first["W_model_witnessed"] == "false" and first["S_model_violated"] == "false"
    div = [r for r in rows if r["mu"] == "0.95"][0]
    assert float(div["S_model"]) < 2 and float(div["W_model"]) > 0.4427
    ref = [r for r in rows if (r["mu"], r["phi"]) == ("0.98", "0.91")][0]
    assert (ref["W_measured"], ref["S_measured"], ref["T_measured"]) == ("0.805", "2.69", "0.91")


def test_tables23_verdicts_self_consistent():
    rows = parse_csv((GOLDEN / "tables23.txt").read_text())
    for r in rows:
        for k in (1, 2, 3):
            w = float(r[f"W{k}"])
            assert (r[f"W{k}_entangled"] == "true") == (w > 0.333333)
            assert (r[f"W{k}_ghz_class"] == "true") == (w > 0.777778)
    ideal = [r for r in rows if r["resource"] == "ghzc" and r["model"] == "ideal" and r["dephased"] == "false"][0]
    assert ideal["W1"] == ideal["W2"] == ideal["W3"]


def test_fig2_crossings():
    rows = parse_csv(cli.run(cli.load_config(["fig2", "--points", "2", "--phi", PI4])))
    cross = {r["quantity"]: float(r["mu"]) for r in rows if r["kind"] == "crossing"}
    assert cross["S"] == pytest.approx(1 / np.sqrt(2), abs=2e-6)
    oracle = brentq(lambda m: 1 - binary_entropy((1 + m) / 2) - (1 / np.log(2) - 1), 0.1, 0.99, xtol=1e-12)
    assert cross["W"] == pytest.approx(oracle, abs=2e-6)
    assert oracle == pytest.approx(0.74, abs=0.01)


def test_fig2_default_phis():
    cfg = cli.load_config(["fig2", "--points", "2"])
    rows = parse_csv(cli.run(cfg))
    phis = sorted({float(r["phi"]) for r in rows})
    assert phis == pytest.approx(sorted([np.arccos(0.62), np.arccos(0.85)]), abs=1e-6)


def test_fig3_mask():
    rows = parse_csv((GOLDEN / "fig3.txt").read_text())
    for r in rows:
        assert (r["W_shown"] != "") == (float(r["W"]) > 0.442695)
        assert (r["S_shown"] != "") == (float(r["S"]) > 2)


def test_fig6_w_state_x_equals_y():
    for mu in np.linspace(0, 1, 5):
        rho = states.rho3(mu, "w")
        wx = workx.avg_work3(rho, BlochDir.axis("x")).average
        wy = workx.avg_work3(rho, BlochDir.axis("y")).average
        assert abs(wx - wy) < 1e-9
    rows = parse_csv((GOLDEN / "fig6.txt").read_text())
    assert all(r["W_vx"] == r["W_vy"] for r in rows if r["base"] == "w")


def test_svetlichny_reports():
    out = json.loads(cli.run(cli.load_config(["svetlichny", "--base", "ghzc", "--mu", "0.854"])))
    assert out["report"]["value"] == pytest.approx(0.854 * 4 * np.sqrt(2), abs=1e-4)
    assert out["report"]["violated"] is True
    out = json.loads(cli.run(cli.load_config(["svetlichny", "--base", "w", "--mu", "0"])))
    assert out["report"]["value"] == 0 and out["report"]["violated"] is False


def test_svetlichny_from_tomography():
    argv = ["svetlichny", "--tomography", "--rate", "200", "--duration", "30", "--seed", "3"]
    out = json.loads(cli.run(cli.load_config(argv)))
    assert out["report"]["source"] == "tomography"
    assert 5.2 < out["report"]["value"] <= 4 * np.sqrt(2) + 1e-6


def test_bell_with_statistics():
    argv = ["bell", "--mu", "0.98", "--phi", "0.91", "--rate", "270", "--duration", "30", "--seed", "1",
            "--resamples", "100"]
    rep = json.loads(cli.run(cli.load_config(argv)))["report"]
    assert rep["S_max"] == pytest.approx(2.72905, abs=1e-5)
    assert abs(rep["S_tomography"] - rep["S_max"]) < 5 * rep["sigma_mc"]
