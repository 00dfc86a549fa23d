import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from adhoc_topics.classify import export_scores
from adhoc_topics.cli import main
from adhoc_topics.labels import default_taxonomy, topic_names
from adhoc_topics.synth import write_pipeline_fixture

RUNNER = CliRunner()

SUBCOMMANDS = ("ingest", "prelabel", "allocate", "serve", "agreement",
               "train", "evaluate", "eventstudy", "panel", "report")


def run(args, **kwargs):
    return RUNNER.invoke(main, args, catch_exceptions=False, **kwargs)


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """Fixture inputs plus a fully executed pipeline."""
    root = tmp_path_factory.mktemp("fixture")
    write_pipeline_fixture(root, seed=0)
    cfg = ["--config", str(root / "config.yaml")]
    for command in ("ingest", "prelabel", "allocate", "agreement", "train",
                    "evaluate", "eventstudy", "panel", "report"):
        result = run([command] + cfg)
        assert result.exit_code == 0, f"{command} failed: {result.output}"
    return root


class TestHelp:
    def test_every_subcommand_exists(self):
        listing = run(["--help"]).output
        for command in SUBCOMMANDS:
            assert command in listing

    @pytest.mark.parametrize("command,keys", [
        ("ingest", ["paths.announcements", "paths.taxonomy", "paths.out_dir", "seed"]),
        ("prelabel", ["paths.corpus", "bm25.k1", "bm25.b", "bm25.score_threshold"]),
        ("allocate", ["allocate.per_topic_sentence_target", "allocate.annotators",
                      "paths.prelabels", "paths.gold"]),
        ("serve", ["serve.host", "serve.port", "serve.show_prelabels"]),
        ("agreement", ["paths.annotations", "agreement.min_topic_support"]),
        ("train", ["train.batch_size", "train.epochs", "train.lr_min",
                   "train.lr_max", "train.seeds", "train.level"]),
        ("evaluate", ["paths.scores", "train.threshold"]),
        ("eventstudy", ["eventstudy.window", "eventstudy.min_obs",
                        "paths.returns", "paths.market", "paths.riskfree"]),
        ("panel", ["panel.min_pair_support", "panel.cluster", "paths.fits"]),
        ("report", ["paths.out_dir"]),
    ])
    def test_help_lists_config_keys(self, command, keys):
        out = run([command, "--help"]).output
        for key in keys:
            assert key in out, f"{command} --help missing {key}"


class TestExitCodes:
    def test_missing_input_is_exit_2_naming_producer(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(json.dumps({
            "paths": {"corpus": str(tmp_path / "nope.jsonl"),
                      "out_dir": str(tmp_path / "out")},
        }), encoding="utf-8")
        result = run(["prelabel", "--config", str(cfg)])
        assert result.exit_code == 2
        assert "adhoc-topics ingest" in result.output

    def test_validation_failure_is_exit_1(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("bm25:\n  k1: -1\n", encoding="utf-8")
        result = run(["prelabel", "--config", str(bad)])
        assert result.exit_code == 1
        assert "k1" in result.output

    def test_report_with_no_runs_is_exit_2(self, tmp_path):
        result = run(["report", "--out-dir", str(tmp_path / "empty")])
        assert result.exit_code == 2
        assert "ingest" in result.output

    def test_empty_announcements_fatal(self, tmp_path):
        ann = tmp_path / "ann.jsonl"
        ann.write_text("garbage\n", encoding="utf-8")
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(json.dumps({
            "paths": {"announcements": str(ann),
                      "out_dir": str(tmp_path / "out")},
        }), encoding="utf-8")
        result = run(["ingest", "--config", str(cfg)])
        assert result.exit_code == 1


class TestPipeline:
    def test_all_stage_outputs_exist(self, pipeline_dir):
        out = pipeline_dir / "out"
        for name in ("corpus.jsonl", "corpus_stats.csv", "corpus_stats.json",
                     "prelabels.csv", "announcement_prelabels.json",
                     "plan.json", "annotator_metrics.csv", "topic_metrics.csv",
                     "fleiss_kappa.csv", "dashboard.json", "loss_trace.csv",
                     "vocabulary.json", "eval_report_document.csv",
                     "event_fits.csv", "topic_percentiles.csv",
                     "significance_split.csv", "panel_report.csv",
                     "interactions.csv", "report.json", "report.md"):
            assert (out / name).exists(), name

    def test_manifests_reference_existing_outputs(self, pipeline_dir):
        out = pipeline_dir / "out"
        manifests = sorted(out.glob("*_manifest.json"))
        assert len(manifests) == 9
        for path in manifests:
            payload = json.loads(path.read_text(encoding="utf-8"))
            assert set(payload) == {"command", "config_hash", "seed",
                                    "package_version", "inputs", "outputs"}
            for out_name in payload["outputs"]:
                assert (out / out_name).exists()

    def test_plan_disjointness(self, pipeline_dir):
        plan = json.loads((pipeline_dir / "out" / "plan.json").read_text())
        seen = set(plan["shared_announcements"])
        for ids in plan["unique_assignments"].values():
            for ann_id in ids:
                assert ann_id not in seen
                seen.add(ann_id)

    def test_evaluate_on_gold_scores_is_perfect(self, pipeline_dir, tmp_path):
        # scores built directly from the gold labels -> macro F1 = 1
        from adhoc_topics.annotation import gold_from_csv
        from adhoc_topics.corpus import read_corpus_file

        corpus = read_corpus_file(pipeline_dir / "out" / "corpus.jsonl")
        gold = gold_from_csv((pipeline_dir / "gold.csv").read_text())
        ids = sorted(gold.labels)
        matrix = np.zeros((len(ids), 20))
        for i, sid in enumerate(ids):
            for t in gold.labels[sid]:
                matrix[i, t] = 1.0
        scores_path = tmp_path / "gold_scores.csv"
        scores_path.write_text(
            export_scores(ids, matrix, topic_names(default_taxonomy())))

        out_dir = tmp_path / "out"
        out_dir.mkdir()
        cfg = {
            "paths": {
                "corpus": str(pipeline_dir / "out" / "corpus.jsonl"),
                "gold": str(pipeline_dir / "gold.csv"),
                "scores": str(scores_path),
                "out_dir": str(out_dir),
            },
        }
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        result = run(["evaluate", "--config", str(cfg_path),
                      "--level", "document"])
        assert result.exit_code == 0
        payload = json.loads((out_dir / "eval_report_document.json").read_text())
        assert payload["macro"]["f1"] == pytest.approx(1.0)
        assert payload["micro"]["f1"] == pytest.approx(1.0)

    def test_env_override_changes_config(self, pipeline_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("APP__BM25__K1", "-3")
        result = run(["prelabel", "--config", str(pipeline_dir / "config.yaml")])
        assert result.exit_code == 1


def test_manifest_is_location_independent(tmp_path):
    # identical runs in different directories produce identical manifests
    payloads = []
    for name in ("left", "right"):
        root = tmp_path / name
        write_pipeline_fixture(root, seed=3, n_sentences=80)
        result = run(["ingest", "--config", str(root / "config.yaml")])
        assert result.exit_code == 0
        payloads.append((root / "out" / "ingest_manifest.json").read_bytes())
    assert payloads[0] == payloads[1]
