import json

import numpy as np
import pytest

from dplds.cli import main
from dplds.experiment import example_plant
from dplds.sysmat import model_to_dict


@pytest.fixture
def files(tmp_path):
    (tmp_path / "plant.json").write_text(json.dumps(model_to_dict(example_plant())))
    invertible = {"A": [[0.5, 0.1], [0.0, 0.3]], "B": [[1.0], [0.5]], "C": [[1.0, -1.0]],
                  "D": [[1.0]]}
    (tmp_path / "sys.json").write_text(json.dumps(invertible))
    (tmp_path / "lowpass.json").write_text(json.dumps({"kind": "lowpass", "cutoff": 0.03}))
    (tmp_path / "white.json").write_text(json.dumps({"kind": "white", "variance": 2.0}))
    (tmp_path / "step.json").write_text(json.dumps({"kind": "step", "sigma_s": [[1.0]]}))
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


BUDGET = ["--epsilon", 2, "--delta", 0.1, "--gamma", 0.5]


def test_design_then_check_output_round_trip(files, capsys):
    design = files / "design.json"
    code, _, _ = run(capsys, "design", "--model", files / "sys.json", "--prior",
                     files / "white.json", "--horizon", 5, *BUDGET, "--out", design)
    assert code == 0
    d = json.loads(design.read_text())
    assert d["check"]["satisfied"] and d["channel"] == "output"
    code, out, _ = run(capsys, "check", "--model", files / "sys.json", "--prior",
                       files / "white.json", "--horizon", 5, "--noise", design, *BUDGET)
    assert code == 0
    assert json.loads(out)["satisfied"]

    half = np.array(d["covariance"]) / 2
    (files / "half.json").write_text(json.dumps({"covariance": half.tolist(), "channel": "output"}))
    code, out, err = run(capsys, "check", "--model", files / "sys.json", "--prior",
                         files / "white.json", "--horizon", 5, "--noise", files / "half.json",
                         *BUDGET)
    assert code == 0
    assert not json.loads(out)["satisfied"]
    assert "NOT satisfied" in err


def test_design_input_channel_ill_conditioned_prior(files, capsys):
    design = files / "v.json"
    code, _, _ = run(capsys, "design", "--channel", "input", "--prior", files / "lowpass.json",
                     "--horizon", 100, "--epsilon", 100, "--delta", 0.1, "--gamma", 0.5,
                     "--out", design)
    assert code == 0
    code, out, _ = run(capsys, "check", "--channel", "input", "--prior", files / "lowpass.json",
                       "--horizon", 100, "--noise", design, "--epsilon", 100, "--delta", 0.1,
                       "--gamma", 0.5)
    rep = json.loads(out)
    assert code == 0 and rep["satisfied"] and rep["route"] == "proportional"


def test_prior_weight_check(files, capsys):
    design = files / "design.json"
    run(capsys, "design", "--model", files / "sys.json", "--prior", files / "white.json",
        "--horizon", 3, *BUDGET, "--out", design)
    code, out, _ = run(capsys, "check", "--prior-weight", "--model", files / "sys.json",
                       "--prior", files / "white.json", "--horizon", 3, "--noise", design,
                       *BUDGET)
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "dp" and rep["satisfied"]


def test_exit_code_validation(files, capsys):
    code, _, err = run(capsys, "design", "--model", files / "sys.json", "--prior",
                       files / "white.json", "--horizon", 3, "--epsilon", -1, "--delta", 0.1,
                       "--gamma", 0.5)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ValidationError"
    (files / "bad.json").write_text("{not json")
    code, _, _ = run(capsys, "design", "--model", files / "bad.json", "--prior",
                     files / "white.json", "--horizon", 3, *BUDGET)
    assert code == 2


def test_exit_code_degenerate_prior(files, capsys):
    code, _, err = run(capsys, "design", "--channel", "input", "--prior", files / "step.json",
                       "--horizon", 3, *BUDGET)
    assert code == 2
    assert "DegeneratePriorError" in err


def test_exit_code_infeasible(files, capsys):
    code, _, _ = run(capsys, "design", "--model", files / "sys.json", "--prior",
                     files / "white.json", "--horizon", 3, "--epsilon", 2, "--delta", 0.1,
                     "--gamma", 1.0)
    assert code == 3
    code, _, err = run(capsys, "design", "--model", files / "plant.json", "--prior",
                       files / "white.json", "--horizon", 3, *BUDGET)
    assert code == 3 and "RankDeficientError" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["design", "--channel", "sideways"])
    assert exc.value.code == 2


def test_c_curve(capsys, tmp_path):
    code, out, _ = run(capsys, "c-curve", "--gamma", 0.5, "--t-min", 99, "--t-max", 100)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "T,c"
    assert float(lines[2].split(",")[1]) == pytest.approx(14.1657418654, rel=1e-10)
    code, _, _ = run(capsys, "c-curve", "--gamma", 1.0)
    assert code == 2


def test_bode(files, capsys):
    code, out, _ = run(capsys, "bode", "--model", files / "plant.json", "--controller",
                       files / "plant.json", "--points", 5)
    # The plant doubles as a strictly proper controller; only the layout is checked.
    assert code == 0
    rows = out.strip().split("\n")
    assert rows[0] == "lambda,gain,error" and len(rows) == 6


def test_experiment_outputs_are_deterministic(files, capsys):
    outs = []
    for name in ("a", "b"):
        code, _, err = run(capsys, "experiment", "--horizon", 20, "--seeds", 2,
                           "--out", files / name)
        assert code == 0 and "optimal" in err
        outs.append(((files / name / "trajectories.csv").read_text(),
                     (files / name / "report.json").read_text()))
    assert outs[0] == outs[1]
    rep = json.loads(outs[0][1])
    assert rep["mechanisms"]["optimal"]["check"]["satisfied"]


def test_experiment_config_file(files, capsys):
    cfg = {"horizon": 10, "seeds": [3, 5], "mechanisms": ["noisefree", "optimal"],
           "reference_filter": {"kind": "lowpass", "cutoff": 0.1}}
    (files / "cfg.json").write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "experiment", "--config", files / "cfg.json")
    rep = json.loads(out)
    assert code == 0 and set(rep["mechanisms"]) == {"noisefree", "optimal"}
    assert len(rep["mechanisms"]["optimal"]["mse_per_seed"]) == 2
