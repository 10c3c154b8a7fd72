import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from specsched import policy
from specsched.cli import main
from specsched.config import ConfigError, ExperimentConfig, load, loads
from specsched.model import immediate_reward

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

DOC = {
    "model": {"n_channels": 2, "minislots": 2, "beta": 0.9, "horizon": 3,
              "p": 0.9, "r": 0.1, "u": 1, "c_idle": 1, "c_busy": 2},
    "initial": {"phases": ["idle", "idle"], "ages": [10, 5], "beliefs": [0.4, 0.7]},
    "policy": "optimal",
    "mode": "original",
    "simulation": {"trajectories": 2000, "seed": 3},
}


def doc(**patch):
    d = json.loads(json.dumps(DOC))
    for path, v in patch.items():
        *head, last = path.split("__")
        node = d
        for h in head:
            node = node[h]
        if v is KeyError:
            del node[last]
        else:
            node[last] = v
    return d


def write(tmp_path, d, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return str(path)


def test_parse_shipped_configs():
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = load(path)
        assert isinstance(cfg, ExperimentConfig)
        assert cfg.initial_state().t == cfg.horizon


def test_delta_expands_symmetrically():
    d = doc()
    del d["model"]["p"], d["model"]["r"]
    d["model"]["delta"] = 0.4
    cfg = loads(json.dumps(d))
    assert (cfg.p, cfg.r) == (0.7, 0.3)
    d["model"]["delta"] = 0.1
    cfg = loads(json.dumps(d))
    assert (cfg.p, cfg.r) == (0.55, 0.45)


@pytest.mark.parametrize("patch, field", [
    ({"model__gamma": 1}, "model.gamma"),
    ({"extra": 1}, "extra"),
    ({"initial__labels": []}, "initial.labels"),
    ({"model__beta": 1.0}, "model.beta"),
    ({"model__r": 0.95}, "model.r"),
    ({"model__p": 1.0}, "model.p"),
    ({"model__u": 0}, "model.u"),
    ({"model__horizon": KeyError}, "model.horizon"),
    ({"initial__ages": [1]}, "initial.ages"),
    ({"initial__ages": [1, -2]}, "initial.ages"),
    ({"initial__phases": ["idle", "off"]}, "initial.phases"),
    ({"initial__beliefs": [0.0, 0.5]}, "initial.beliefs"),
    ({"policy": "best"}, "policy"),
    ({"mode": "oracle"}, "mode"),
    ({"simulation__seed": -1}, "simulation.seed"),
    ({"simulation__trajectories": 0}, "simulation.trajectories"),
])
def test_validation_names_field(patch, field):
    with pytest.raises(ConfigError) as err:
        loads(json.dumps(doc(**patch)))
    assert err.value.field == field


def test_delta_and_p_conflict():
    d = doc()
    d["model"]["delta"] = 0.2
    with pytest.raises(ConfigError) as err:
        loads(json.dumps(d))
    assert err.value.field == "model.delta"


def test_bad_json():
    with pytest.raises(ConfigError):
        loads("{not json")


def test_round_trip():
    cfg = loads(json.dumps(doc()))
    again = loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_overrides_skip_none():
    cfg = loads(json.dumps(doc()))
    out = cfg.with_overrides(policy="greedy", seed=None)
    assert out.policy == "greedy" and out.seed == cfg.seed


def test_exit_code_config_error(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, doc(model__beta=2))]) == 2
    assert "model.beta" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["curves", "--x-max", "1"]) == 2


def test_exit_code_too_large(tmp_path, monkeypatch):
    monkeypatch.setattr(policy, "MAX_STATES", 10)
    assert main(["solve", "--config", write(tmp_path, doc())]) == 3
    assert main(["simulate", "--config", write(tmp_path, doc())]) == 3


def test_solve_single_slot(tmp_path):
    out = tmp_path / "out.json"
    assert main(["solve", "--config", write(tmp_path, doc(model__horizon=1)), "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    cfg = loads(json.dumps(doc(model__horizon=1)))
    s, model = cfg.initial_state(), cfg.model()
    assert rec["value"] == max(immediate_reward(s, a, model) for a in (0, 1))
    assert rec["best_action"] in (1, 2)


def test_k1_greedy_equals_optimal(tmp_path):
    out = tmp_path / "o.json"
    values = {}
    for pol in ("optimal", "greedy"):
        path = write(tmp_path, doc(model__minislots=1, model__horizon=4))
        assert main(["solve", "--config", path, "--policy", pol, "--out", str(out)]) == 0
        values[pol] = json.loads(out.read_text())["value"]
    assert values["greedy"] == pytest.approx(values["optimal"], abs=1e-9)


def test_simulate_reports_and_is_deterministic(tmp_path):
    path = write(tmp_path, doc())
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["simulate", "--config", path, "--out", str(a)]) == 0
    assert main(["simulate", "--config", path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rec = json.loads(a.read_text())
    assert rec["n"] == 2000 and rec["seed"] == 3
    assert abs(rec["discrepancy_sigma"]) < 4


def test_output_key_in_config(tmp_path):
    target = tmp_path / "from_config.json"
    assert main(["solve", "--config", write(tmp_path, doc(output=str(target)))]) == 0
    assert json.loads(target.read_text())["policy"] == "optimal"


def test_curves_csv(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["curves", "--u", "1", "3", "--x-max", "5", "--out", str(out)]) == 0
    lines = out.read_bytes().split(b"\r\n")
    assert lines[0] == b"u,x,p_idle,x0"
    assert len([ln for ln in lines[1:] if ln]) == 10


def test_numpy_backend_matches_default(tmp_path):
    path = write(tmp_path, doc(policy="random"))
    outs = []
    for flag in ("1", "0"):
        out = tmp_path / f"sim{flag}.json"
        env = dict(os.environ, SPECSCHED_NUMBA=flag)
        subprocess.run([sys.executable, "-m", "specsched", "simulate", "--config", path,
                        "--out", str(out)], check=True, env=env)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
