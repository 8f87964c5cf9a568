"""End-to-end pipeline runs on small corpora: config validation, counter
identities, canonical ordering, shard and rerun byte-stability, ablation
arithmetic, the leakage guard, external scoring, and eval reports."""

import io
import json
import random
import sys
from pathlib import Path

import pytest

from simplecorpus.errors import CorpusIOError, UsageError
from simplecorpus.masking import MaskingPolicy
from simplecorpus.pipeline import PipelineConfig, run_eval, run_prepare
from simplecorpus.substitution import SubstitutionPolicy

MOCK = str(Path(__file__).parent / "mock_sidecar.py")

LEXICON = {
    "the": 0.05, "a": 0.05, "we": 0.1, "cat": 0.1, "dog": 0.12, "sat": 0.15,
    "ran": 0.15, "on": 0.05, "mat": 0.2, "rug": 0.2, "tool": 0.1, "work": 0.15,
    "day": 0.1, "sun": 0.1, "to": 0.05, "of": 0.05, "in": 0.05, "and": 0.05,
    "it": 0.05, "use": 0.1, "every": 0.15, "single": 0.2, "at": 0.05,
    "all": 0.1, "like": 0.12, "lot": 0.15, "more": 0.1, "than": 0.1,
    "before": 0.15, "now": 0.1, "here": 0.1, "plain": 0.2, "words": 0.15,
    "with": 0.05, "no": 0.05, "matches": 0.2, "utilize": 0.7, "commence": 0.7,
    "start": 0.1,
}

SIMPLE_LINES = [
    "the cat sat on the mat",
    "we ran to the sun",
    "the dog sat on the rug",
    "we work every single day",
    "it is a tool of the day",
    "the cat and the dog ran here",
]

# 20 tokens with one one-for-one rewrite: token F1 lands exactly on 0.95
EMIT20 = "we utilize the tool every single day at work and we like it a lot more than before now here"
EMIT20_REPLACED = EMIT20.replace("utilize", "use")
SHORT_DISCARD = "we utilize the tool"
NO_MATCH = "plain words with no matches here"
ORDINARY_LINES = [EMIT20, SHORT_DISCARD, NO_MATCH]


@pytest.fixture
def ws(tmp_path):
    paths = {
        "simple": str(tmp_path / "simple.txt"),
        "ordinary": str(tmp_path / "ordinary.txt"),
        "lexicon": str(tmp_path / "lexicon.tsv"),
        "rules": str(tmp_path / "rules.tsv"),
        "dir": tmp_path,
    }
    Path(paths["simple"]).write_text("\n".join(SIMPLE_LINES) + "\n")
    Path(paths["ordinary"]).write_text("\n".join(ORDINARY_LINES) + "\n")
    Path(paths["lexicon"]).write_text(
        "\n".join(f"{w}\t{s}" for w, s in LEXICON.items()) + "\n"
    )
    Path(paths["rules"]).write_text("utilize\tuse\t0.8\ncommence\tstart\t0.7\n")
    return paths


def config_for(ws, name="pairs.jsonl", **over):
    fields = dict(
        simple_corpus=ws["simple"],
        ordinary_corpus=ws["ordinary"],
        rules_path=ws["rules"],
        lexicon_path=ws["lexicon"],
        output=str(ws["dir"] / name),
    )
    fields.update(over)
    return PipelineConfig(**fields)


def read_pairs(path):
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


class TestConfigValidation:
    @pytest.mark.parametrize(
        "over",
        [
            {"shards": 0},
            {"progress_every": 0},
            {"ablation": "bogus"},
            {"scorer_kind": "bogus"},
            {"simple_corpus": None, "ordinary_corpus": None},
            {"ordinary_corpus": None, "ablation": "substitute-only"},
            {"simple_corpus": None, "ablation": "mask-only"},
            {"rules_path": None},
            {"lexicon_path": None},
            {"scorer_kind": "frequency", "frequency_path": None},
            {"scorer_kind": "external", "scorer_addr": None},
            {"output": ""},
        ],
    )
    def test_rejected(self, ws, over):
        with pytest.raises(UsageError):
            config_for(ws, **over).validate()

    def test_external_similarity_needs_addr(self, ws):
        cfg = config_for(ws, substitution=SubstitutionPolicy(similarity_backend="external"))
        with pytest.raises(UsageError):
            cfg.validate()

    def test_mask_only_without_rules_is_fine(self, ws):
        config_for(ws, ablation="mask-only", rules_path=None).validate()


class TestPrepareEndToEnd:
    def test_counts_identity_and_statuses(self, ws):
        summary = run_prepare(config_for(ws))
        s = summary.to_dict()
        assert s["read"] == 9
        assert s["emitted"] == 7  # 6 masked + 1 substituted
        assert s["emitted_mask"] == 6
        assert s["emitted_substitute"] == 1
        assert s["discarded_by_similarity"] == 1
        assert s["no_op"] == 1
        assert s["read"] == (
            s["emitted"]
            + s["excluded"]
            + s["discarded_by_similarity"]
            + s["no_op"]
            + s["skipped_errors"]
        )

    def test_output_sorted_and_routed_by_corpus(self, ws):
        cfg = config_for(ws)
        run_prepare(cfg)
        pairs = read_pairs(cfg.output)
        ids = [p["id"] for p in pairs]
        assert ids == sorted(ids)
        by_id = {p["id"]: p for p in pairs}
        assert all(by_id[i]["strategy"] == "mask" for i in range(6))
        # the one ordinary sentence that clears the gate keeps its global id
        assert by_id[6]["strategy"] == "substitute"
        assert by_id[6]["target"] == EMIT20_REPLACED
        assert any(op["kind"] == "replace" and op["inserted"] == "use" for op in by_id[6]["ops"])

    def test_some_tokens_actually_masked(self, ws):
        cfg = config_for(ws)
        summary = run_prepare(cfg)
        assert summary.masked_token_fraction > 0.0
        pairs = read_pairs(cfg.output)
        assert any("<mask>" in p["source"] for p in pairs)
        assert not any("<mask>" in p["target"] for p in pairs)

    def test_rerun_is_byte_identical(self, ws):
        a = config_for(ws, name="a.jsonl")
        b = config_for(ws, name="b.jsonl")
        run_prepare(a)
        run_prepare(b)
        assert Path(a.output).read_bytes() == Path(b.output).read_bytes()

    def test_zero_mask_probability_passthrough(self, ws):
        cfg = config_for(
            ws,
            ablation="mask-only",
            rules_path=None,
            masking=MaskingPolicy(max_mask_prob=0.0),
        )
        summary = run_prepare(cfg)
        assert summary.masked_token_fraction == 0.0
        for p in read_pairs(cfg.output):
            assert p["source"] == p["target"]

    def test_progress_lines(self, ws):
        stream = io.StringIO()
        run_prepare(config_for(ws, progress_every=4), progress_stream=stream)
        events = [json.loads(line) for line in stream.getvalue().splitlines()]
        assert [e["processed"] for e in events] == [4, 8, 9]
        assert all(e["event"] == "progress" and e["total"] == 9 for e in events)

    def test_missing_corpus_is_io_error(self, ws):
        with pytest.raises(CorpusIOError):
            run_prepare(config_for(ws, simple_corpus=str(ws["dir"] / "absent.txt")))


class TestAblations:
    def test_mode_counts_and_strategies(self, ws):
        mask_cfg = config_for(ws, name="mask.jsonl", ablation="mask-only")
        sub_cfg = config_for(ws, name="sub.jsonl", ablation="substitute-only")
        both_cfg = config_for(ws, name="both.jsonl")
        m = run_prepare(mask_cfg)
        s = run_prepare(sub_cfg)
        b = run_prepare(both_cfg)

        assert (m.read, m.emitted) == (6, 6)
        assert (s.read, s.emitted) == (3, 1)
        assert s.discarded_by_similarity == 1 and s.no_op == 1
        assert b.read == m.read + s.read
        assert b.emitted == m.emitted + s.emitted
        assert b.emitted_mask == m.emitted_mask
        assert b.emitted_substitute == s.emitted_substitute

        assert all(p["strategy"] == "mask" for p in read_pairs(mask_cfg.output))
        assert all(p["strategy"] == "substitute" for p in read_pairs(sub_cfg.output))

    def test_single_mode_outputs_are_slices_of_both(self, ws):
        # ids are assigned over all configured corpora, so each single-mode
        # run reproduces exactly its slice of the both-mode output
        mask_cfg = config_for(ws, name="mask.jsonl", ablation="mask-only")
        sub_cfg = config_for(ws, name="sub.jsonl", ablation="substitute-only")
        both_cfg = config_for(ws, name="both.jsonl")
        run_prepare(mask_cfg)
        run_prepare(sub_cfg)
        run_prepare(both_cfg)
        both = read_pairs(both_cfg.output)
        assert read_pairs(mask_cfg.output) == [p for p in both if p["strategy"] == "mask"]
        assert read_pairs(sub_cfg.output) == [p for p in both if p["strategy"] == "substitute"]


def big_workspace(tmp_path):
    rng = random.Random(3)
    filler = [w for w, s in LEXICON.items() if s < 0.25]
    simple = [
        " ".join(rng.choice(filler) for _ in range(rng.randint(4, 10))) for _ in range(40)
    ]
    ordinary = []
    for i in range(12):
        if i % 3 == 0:
            ordinary.append("we utilize the " + " ".join(rng.choice(filler) for _ in range(17)))
        elif i % 3 == 1:
            ordinary.append(SHORT_DISCARD)
        else:
            ordinary.append(" ".join(rng.choice(filler) for _ in range(6)))
    paths = {
        "simple": str(tmp_path / "big_simple.txt"),
        "ordinary": str(tmp_path / "big_ordinary.txt"),
        "lexicon": str(tmp_path / "lexicon.tsv"),
        "rules": str(tmp_path / "rules.tsv"),
        "dir": tmp_path,
    }
    Path(paths["simple"]).write_text("\n".join(simple) + "\n")
    Path(paths["ordinary"]).write_text("\n".join(ordinary) + "\n")
    Path(paths["lexicon"]).write_text("\n".join(f"{w}\t{s}" for w, s in LEXICON.items()) + "\n")
    Path(paths["rules"]).write_text("utilize\tuse\t0.8\n")
    return paths


class TestShardInvariance:
    def test_shard_counts_do_not_change_bytes(self, tmp_path):
        ws = big_workspace(tmp_path)
        outputs = []
        summaries = []
        for shards in (1, 2, 8):
            cfg = config_for(ws, name=f"pairs_s{shards}.jsonl", shards=shards)
            summaries.append(run_prepare(cfg).to_dict())
            outputs.append(Path(cfg.output).read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
        assert summaries[0] == summaries[1] == summaries[2]

    def test_more_shards_than_records(self, ws):
        cfg = config_for(ws, name="tiny.jsonl", shards=64)
        baseline = config_for(ws, name="tiny_base.jsonl", shards=1)
        run_prepare(cfg)
        run_prepare(baseline)
        assert Path(cfg.output).read_bytes() == Path(baseline.output).read_bytes()


class TestLeakageGuard:
    def test_full_exclusion_blocks_everything(self, ws):
        excl = ws["dir"] / "heldout.txt"
        excl.write_text("\n".join(SIMPLE_LINES + ORDINARY_LINES) + "\n")
        cfg = config_for(ws, exclusion_paths=(str(excl),))
        summary = run_prepare(cfg)
        assert summary.emitted == 0
        assert summary.excluded == 9
        assert read_pairs(cfg.output) == []

    def test_exclusion_matches_ignore_case_and_spacing(self, ws):
        excl = ws["dir"] / "heldout.txt"
        excl.write_text("  THE   CAT sat on the MAT \n")
        summary = run_prepare(config_for(ws, exclusion_paths=(str(excl),)))
        assert summary.excluded == 1

    def test_substitution_cannot_rewrite_into_heldout_text(self, ws):
        # the raw ordinary sentence is clean, but after "utilize" -> "use"
        # it becomes exactly the held-out sentence; the post-check must fire
        excl = ws["dir"] / "heldout.txt"
        excl.write_text(EMIT20_REPLACED + "\n")
        cfg = config_for(ws, ablation="substitute-only", exclusion_paths=(str(excl),))
        summary = run_prepare(cfg)
        assert summary.excluded == 1
        assert summary.emitted == 0
        assert summary.discarded_by_similarity == 1 and summary.no_op == 1

    def test_missing_exclusion_file_is_fatal(self, ws):
        cfg = config_for(ws, exclusion_paths=(str(ws["dir"] / "absent.txt"),))
        with pytest.raises(CorpusIOError):
            run_prepare(cfg)


class TestExternalScoring:
    def test_spawned_scorer_runs_and_reruns_identically(self, ws):
        addr = f"{sys.executable} {MOCK}"
        a = config_for(
            ws, name="ext_a.jsonl", ablation="mask-only", rules_path=None,
            scorer_kind="external", lexicon_path=None, scorer_addr=addr,
        )
        b = config_for(
            ws, name="ext_b.jsonl", ablation="mask-only", rules_path=None,
            scorer_kind="external", lexicon_path=None, scorer_addr=addr,
        )
        sa = run_prepare(a)
        sb = run_prepare(b)
        assert sa.emitted == 6
        assert Path(a.output).read_bytes() == Path(b.output).read_bytes()
        assert sa.to_dict() == sb.to_dict()

    def test_tcp_scorer_matches_spawned(self, ws):
        import subprocess

        spawn_cfg = config_for(
            ws, name="ext_spawn.jsonl", ablation="mask-only", rules_path=None,
            scorer_kind="external", lexicon_path=None,
            scorer_addr=f"{sys.executable} {MOCK}",
        )
        run_prepare(spawn_cfg)

        proc = subprocess.Popen(
            [sys.executable, MOCK, "--transport", "tcp"], stdout=subprocess.PIPE, text=True
        )
        try:
            port = int(proc.stdout.readline().split()[1])
            tcp_cfg = config_for(
                ws, name="ext_tcp.jsonl", ablation="mask-only", rules_path=None,
                scorer_kind="external", lexicon_path=None,
                scorer_addr=f"127.0.0.1:{port}",
            )
            run_prepare(tcp_cfg)
        finally:
            proc.terminate()
            proc.wait(timeout=5)
        assert Path(tcp_cfg.output).read_bytes() == Path(spawn_cfg.output).read_bytes()

    def test_per_record_scorer_errors_are_skipped_not_fatal(self, ws):
        cfg = config_for(
            ws, name="ext_err.jsonl", ablation="mask-only", rules_path=None,
            scorer_kind="external", lexicon_path=None,
            scorer_addr=f"{sys.executable} {MOCK} --error-every 5",
        )
        summary = run_prepare(cfg)
        assert summary.skipped_errors >= 1
        assert summary.read == summary.emitted + summary.skipped_errors


class TestRunEval:
    def test_perfect_system_scores_100(self, write_jsonl):
        path = write_jsonl(
            "sys.jsonl",
            [
                {"input": "the big cat sat", "output": "the cat sat", "references": ["the cat sat"]},
                {"input": "a b c", "output": "a b c", "references": ["a b c"]},
            ],
        )
        report = run_eval("sari", path)
        assert report["count"] == 2 and report["skipped"] == 0
        assert report["mean"]["sari"] == pytest.approx(100.0)

    def test_invalid_lines_are_skipped(self, tmp_path):
        path = tmp_path / "sys.jsonl"
        path.write_text(
            json.dumps({"input": "a b", "output": "a b", "references": ["a b"]})
            + "\nnot json at all\n"
            + json.dumps({"input": "a", "output": "a"})  # missing references
            + "\n"
            + json.dumps({"input": "a", "output": "a", "references": []})  # empty refs
            + "\n"
        )
        report = run_eval("sari", str(path))
        assert report["count"] == 1
        assert report["skipped"] == 3

    def test_no_valid_lines_is_fatal(self, tmp_path):
        path = tmp_path / "sys.jsonl"
        path.write_text("garbage\n{}\n")
        with pytest.raises(CorpusIOError):
            run_eval("sari", str(path))

    def test_missing_file_is_fatal(self):
        with pytest.raises(CorpusIOError):
            run_eval("sari", "/nonexistent/sys.jsonl")

    def test_unknown_metric_is_usage_error(self, write_jsonl):
        path = write_jsonl("sys.jsonl", [{"input": "a", "output": "a", "references": ["a"]}])
        with pytest.raises(UsageError):
            run_eval("bleu", path)

    def test_lowercase_toggle(self, write_jsonl):
        path = write_jsonl(
            "sys.jsonl",
            [{"input": "The Big Cat sat", "output": "THE CAT SAT", "references": ["the cat sat"]}],
        )
        assert run_eval("sari", path)["mean"]["sari"] == pytest.approx(100.0)
        assert run_eval("sari", path, lowercase=False)["mean"]["sari"] < 100.0

    def test_dsari_report_keys(self, write_jsonl):
        path = write_jsonl(
            "sys.jsonl",
            [
                {
                    "input": "the cat sat on a mat .",
                    "output": "the cat sat .",
                    "references": ["the cat sat ."],
                }
            ],
        )
        report = run_eval("dsari", path)
        assert set(report["mean"]) == {"dsari", "d_keep", "d_del", "d_add"}
        assert report["mean"]["dsari"] == pytest.approx(100.0)

    def test_per_instance_breakdown(self, write_jsonl):
        path = write_jsonl(
            "sys.jsonl",
            [
                {"input": "a b c", "output": "a b c", "references": ["a b c"]},
                {"input": "a b c d e", "output": "a b x", "references": ["a b y", "a b x z"]},
            ],
        )
        report = run_eval("sari", path, per_instance=True)
        assert len(report["per_instance"]) == 2
        assert report["per_instance"][0]["sari"] == pytest.approx(100.0)
        mean = sum(d["sari"] for d in report["per_instance"]) / 2
        assert report["mean"]["sari"] == pytest.approx(mean)
