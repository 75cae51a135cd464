"""End-to-end CLI checks through the public entry point."""

import json
import os

import pytest

from cfxbench.cli import main
from cfxbench.data import load_snapshot
from cfxbench.harness.report import load_report_csv

RAW_TSV = """\
u1\ti1\t5\t100
u1\ti2\t4\t101
u1\ti3\t4\t102
u2\ti1\t5\t103
u2\ti2\t4\t104
u2\ti4\t4\t105
u3\ti2\t5\t106
u3\ti3\t4\t107
u3\ti4\t5\t108
u4\ti1\t4\t109
u4\ti3\t5\t110
u4\ti4\t4\t111
u5\ti1\t2\t112
u5\ti2\t4\t113
u5\ti3\t4\t114
u5\ti4\t5\t115
"""

SYNTH_ARGS = [
    "--data.format", "synthetic",
    "--data.synth_users", "30",
    "--data.synth_items", "24",
    "--data.synth_clusters", "3",
    "--data.synth_mean_degree", "5.0",
    "--recommender.dim", "4",
    "--recommender.max_epochs", "8",
    "--eval.k_values", "3",
    "--eval.t_steps", "4",
    "--eval.n_eval_users", "3",
]


def strip_wall_time(text: str) -> str:
    lines = []
    for line in text.strip().split("\n"):
        cells = line.split(",")
        if cells[7] == "wall_time_s":
            continue
        lines.append(",".join(cells[:-1]))
    return "\n".join(lines)


class TestPreprocess:
    def test_counts_and_snapshot(self, tmp_path, capsys):
        raw = tmp_path / "raw.tsv"
        raw.write_text(RAW_TSV)
        snap = tmp_path / "snap.npz"
        code = main([
            "preprocess",
            "--data.path", str(raw),
            "--data.format", "tsv",
            "--out", str(snap),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "users=5 items=4 interactions=15" in out
        matrix = load_snapshot(str(snap))
        assert (matrix.num_users, matrix.num_items) == (5, 4)
        assert matrix.num_interactions == 15

    def test_missing_path_errors(self, capsys):
        code = main(["preprocess"])
        assert code == 2
        assert "data.path" in capsys.readouterr().err


class TestTrain:
    def test_writes_checkpoint(self, tmp_path, capsys):
        ckpt = tmp_path / "model.npz"
        code = main(["train", *SYNTH_ARGS, "--out", str(ckpt)])
        assert code == 0
        assert ckpt.exists()
        out = capsys.readouterr().out
        assert "trained mf" in out

    def test_reuses_checkpoint(self, tmp_path, capsys):
        ckpt = tmp_path / "model.npz"
        assert main(["train", *SYNTH_ARGS, "--out", str(ckpt)]) == 0
        capsys.readouterr()
        assert main(["train", *SYNTH_ARGS, "--out", str(ckpt)]) == 0
        assert "loaded existing checkpoint" in capsys.readouterr().out


class TestExplain:
    def test_json_lines_for_one_user(self, tmp_path):
        out = tmp_path / "ex.jsonl"
        code = main([
            "explain", *SYNTH_ARGS,
            "--eval.explainers", "random",
            "--user", "5",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        records = [json.loads(line) for line in lines]
        assert records
        for r in records:
            assert r["user"] == 5
            assert r["method"] == "random"
            assert r["level"] in ("item", "list")
            assert "mask" in r
            assert "wall_time_ms" in r

    def test_out_of_range_user_errors(self, capsys):
        code = main(["explain", *SYNTH_ARGS, "--user", "10000"])
        assert code == 2
        assert "out of range" in capsys.readouterr().err


class TestEvaluate:
    def run_once(self, tmp_path, name):
        out_dir = tmp_path / name
        code = main([
            "evaluate", *SYNTH_ARGS,
            "--eval.explainers", "random,accent",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        return out_dir

    def test_outputs_present_and_loadable(self, tmp_path):
        out_dir = self.run_once(tmp_path, "run")
        for fname in ("report.csv", "report.json", "positional.csv",
                      "explanations.jsonl", "config.resolved.ini"):
            assert (out_dir / fname).exists(), fname
        report = load_report_csv(str(out_dir / "report.csv"))
        assert report.rows
        explainers = {r.explainer for r in report.rows}
        assert explainers == {"random", "accent"}
        with open(out_dir / "explanations.jsonl") as fh:
            for line in fh:
                json.loads(line)

    def test_two_runs_byte_identical_excluding_wall_time(self, tmp_path):
        a = self.run_once(tmp_path, "a")
        b = self.run_once(tmp_path, "b")
        text_a = (a / "report.csv").read_text()
        text_b = (b / "report.csv").read_text()
        assert strip_wall_time(text_a) == strip_wall_time(text_b)
        assert (a / "positional.csv").read_text() != "" and (
            strip_wall_time((a / "positional.csv").read_text())
            == strip_wall_time((b / "positional.csv").read_text())
        )

    def test_config_file_plus_flag_precedence(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[eval]\nn_eval_users = 2\nexplainers = random\n")
        out_dir = tmp_path / "cfgrun"
        code = main([
            "evaluate", *SYNTH_ARGS,
            "--config", str(ini),
            "--set", "eval.n_eval_users=4",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        assert "evaluated 3 users" in capsys.readouterr().out  # flag beats --set


class TestReport:
    def test_renders_figures(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        assert main([
            "evaluate", *SYNTH_ARGS,
            "--eval.explainers", "random,shap",
            "--shap.n_permutations", "4",
            "--out-dir", str(out_dir),
        ]) == 0
        capsys.readouterr()
        code = main(["report", "--dir", str(out_dir)])
        assert code == 0
        pngs = [f for f in os.listdir(out_dir) if f.endswith(".png")]
        assert pngs
        assert any(f.startswith("bar_") for f in pngs)
        assert any(f.startswith("position_") for f in pngs)

    def test_missing_report_errors(self, tmp_path, capsys):
        code = main(["report", "--dir", str(tmp_path)])
        assert code == 2
        assert "report.csv" in capsys.readouterr().err


class TestAblateScope:
    def test_combined_table(self, tmp_path):
        out_dir = tmp_path / "abl"
        code = main([
            "ablate-scope", *SYNTH_ARGS,
            "--eval.explainers", "unr",
            "--eval.levels", "item",
            "--unr.n_iterations", "10",
            "--scopes", "full,khop,useronly",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        report = load_report_csv(str(out_dir / "ablation.csv"))
        assert {r.scope for r in report.rows} == {"full", "k_hop", "user_only"}

    def test_no_graph_explainer_errors(self, tmp_path, capsys):
        code = main([
            "ablate-scope", *SYNTH_ARGS,
            "--eval.explainers", "random",
            "--out-dir", str(tmp_path / "x"),
        ])
        assert code == 2
        assert "scope" in capsys.readouterr().err


class TestGrid:
    def test_grid_table_and_best(self, tmp_path, capsys):
        out_dir = tmp_path / "grid"
        code = main([
            "grid", *SYNTH_ARGS,
            "--eval.explainers", "shap",
            "--eval.levels", "item",
            "--shap.n_permutations", "4",
            "--grid.n_users", "2",
            "--param", "shap.n_permutations=4,8",
            "--objective", "pos_p",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "best pos_p=" in out
        lines = (out_dir / "grid.csv").read_text().strip().split("\n")
        assert lines[0] == "shap.n_permutations,pos_p"
        assert len(lines) == 3

    def test_bad_param_spec_errors(self, capsys):
        code = main([
            "grid", *SYNTH_ARGS,
            "--param", "shap.n_permutations",
            "--objective", "pos_p",
        ])
        assert code == 2
        assert "--param" in capsys.readouterr().err


class TestParser:
    def test_every_config_key_has_a_flag(self):
        from cfxbench.harness.config import CONFIG_SCHEMA
        from cfxbench.cli import build_parser

        parser = build_parser()
        sub = next(
            a for a in parser._actions
            if isinstance(a, type(parser._subparsers._group_actions[0]))
        )
        evaluate = sub.choices["evaluate"]
        flags = {
            s for action in evaluate._actions for s in action.option_strings
        }
        for section, keys in CONFIG_SCHEMA.items():
            for key in keys:
                assert f"--{section}.{key}" in flags

    def test_unknown_subcommand_exits(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
