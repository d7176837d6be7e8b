import json
import subprocess
import sys

import pytest

from omega_avg_rl.automata import automaton_to_hoa
from omega_avg_rl.bench import f_goal_automaton
from omega_avg_rl.cli import main


def strip_wall_time(payload: dict) -> dict:
    out = dict(payload)
    out["wall_time_s"] = None
    return out


class TestGen:
    def test_writes_benchmark_files(self, tmp_path, capsys):
        assert main(["gen", "--id", "two-state-fga", "--out-dir", str(tmp_path)]) == 0
        paths = json.loads(capsys.readouterr().out)
        mdp = json.loads((tmp_path / "two-state-fga.mdp.json").read_text())
        assert mdp["states"] == 2
        hoa = (tmp_path / "two-state-fga.hoa").read_text()
        assert "acc-name: Buchi" in hoa
        assert set(paths) == {"mdp", "automaton"}

    def test_emit_machine_table(self, tmp_path, capsys):
        main(["gen", "--id", "infmem", "--out-dir", str(tmp_path), "--emit-machine"])
        table = json.loads((tmp_path / "infmem.machine.json").read_text())
        rewards = {row["reward"] for row in table}
        assert -100.0 in rewards          # eps penalties (c2 = -|c|, c = 100)
        assert any(row["letter"] in ("eps1", "eps2") for row in table)


class TestCheck:
    def test_deterministic_classification(self, tmp_path, capsys):
        path = tmp_path / "fgoal.hoa"
        path.write_text(automaton_to_hoa(f_goal_automaton()))
        main(["check", "--automaton", str(path)])
        out = json.loads(capsys.readouterr().out)
        assert out == {"deterministic": True, "absolute_liveness": True,
                       "stable": False, "fairness": False}

    def test_nondeterministic_reports_unchecked(self, tmp_path, capsys):
        main(["gen", "--id", "two-state-fga", "--out-dir", str(tmp_path)])
        capsys.readouterr()
        main(["check", "--automaton", str(tmp_path / "two-state-fga.hoa")])
        out = json.loads(capsys.readouterr().out)
        assert out["deterministic"] is False
        assert out["absolute_liveness"] == "unchecked"


class TestLearnAndVerify:
    def learn(self, tmp_path, seed=0, out_name="result.json"):
        out = tmp_path / out_name
        code = main(["learn", "--benchmark", "two-state-fga", "--method", "diff-q",
                     "--steps", "50000", "--seed", str(seed), "--out", str(out)])
        assert code == 0
        return json.loads(out.read_text())

    def test_learn_result_contents(self, tmp_path):
        payload = self.learn(tmp_path)
        assert payload["sat_prob"] == 1.0
        assert payload["product_states"] == 4
        assert payload["machine"]["kind"] == "reset+hard"
        assert payload["r_bar_trace"][0][0] == 0
        assert len(payload["greedy"]) == payload["states_seen"]

    def test_learn_determinism_modulo_wall_time(self, tmp_path):
        a = self.learn(tmp_path, out_name="a.json")
        b = self.learn(tmp_path, out_name="b.json")
        assert json.dumps(strip_wall_time(a), sort_keys=True) == \
            json.dumps(strip_wall_time(b), sort_keys=True)

    def test_learn_from_generated_files(self, tmp_path, capsys):
        main(["gen", "--id", "two-state-fga", "--out-dir", str(tmp_path)])
        capsys.readouterr()
        out = tmp_path / "res.json"
        code = main(["learn", "--mdp", str(tmp_path / "two-state-fga.mdp.json"),
                     "--automaton", str(tmp_path / "two-state-fga.hoa"),
                     "--method", "diff-q", "--steps", "50000", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["sat_prob"] == 1.0

    def test_verify_optimal(self, tmp_path, capsys):
        code = main(["verify", "--benchmark", "multichain-example"])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["optimal_sat"]["value"] == pytest.approx(1.0, abs=1e-9)
        assert out["optimal_sat"]["kind"] == "optimal_sat"

    def test_verify_policy_and_dump(self, tmp_path, capsys):
        result = tmp_path / "result.json"
        main(["learn", "--benchmark", "two-state-fga", "--method", "diff-q",
              "--steps", "50000", "--out", str(result)])
        capsys.readouterr()
        dump = tmp_path / "product.json"
        code = main(["verify", "--benchmark", "two-state-fga",
                     "--policy", str(result), "--dump-product", str(dump)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["policy_sat"]["value"] == pytest.approx(1.0, abs=1e-9)
        dumped = json.loads(dump.read_text())
        assert {"reward", "accepting", "to"} <= set(dumped["transitions"][0])


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--benchmark", "multichain-example", "--method",
                     "diff-q", "--samples", "2", "--steps", "2000",
                     "--master-seed", "5", "--workers", "1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("# master_seed=5")
        assert len(lines) == 4

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "omega_avg_rl.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0


def test_cli_module_entry():
    from omega_avg_rl import cli
    parser = cli.build_parser()
    assert parser.prog == "omega-avg-rl"
