"""Smoke tests for the Python module: every exported operation gets exercised
once on a small end-to-end flow. Run with PYTHONPATH pointing at the built
package directory (ctest wires this up automatically)."""

import json
import os
import tempfile

import crosstag


def test_tag_conversions():
    assert len(crosstag.unified_tags()) == 13
    assert crosstag.unified_tags()[0] == "O"

    tags = ["B-POS", "I-POS", "E-POS", "O", "S-NEG"]
    assert crosstag.unified_to_boundary(tags) == ["B", "I", "E", "O", "S"]

    segments = crosstag.segments_from_tags(tags)
    assert segments == [(0, 2, "POS"), (4, 4, "NEG")]

    back = crosstag.tags_from_segments(segments, 5)
    assert back == tags
    assert crosstag.tags_from_segments(segments, 5, with_sentiment=False) == ["B", "I", "E", "O", "S"]

    # the repair decoder is total on ill-formed input
    assert crosstag.segments_from_tags(["I-POS", "E-POS", "O"]) == [(0, 1, "POS")]


def test_opinion_labels():
    labels = crosstag.label_opinions(["The", "pizza", "is", "Great"], ["great"])
    assert labels == [0, 0, 0, 1]


def test_micro_f1_worked_example():
    gold = [(0, 2, "POS")]
    pred = [(0, 2, "POS"), (4, 4, "NEG")]
    report = crosstag.micro_f1(gold, pred, "ADS")
    assert report["tp"] == 1
    assert abs(report["precision"] - 0.5) < 1e-12
    assert abs(report["recall"] - 1.0) < 1e-12
    assert abs(report["micro_f1"] - 2.0 / 3.0) < 1e-12
    assert crosstag.micro_f1(gold, [(0, 2, "NEG")], "AD")["tp"] == 1


def test_grad_check():
    report = crosstag.grad_check(mode="AD_SAL", length=3, emb_dim=4, hidden=4, relations=2, hops=2)
    assert report["max_rel_err"] < 1e-4


def test_end_to_end_pipeline():
    with tempfile.TemporaryDirectory() as tmp:
        paths = crosstag.generate_synth(os.path.join(tmp, "data"), seed=5,
                                        train_sentences=24, test_sentences=8)
        parsed = crosstag.parse_conll(paths["source_train"])
        assert len(parsed) == 24
        assert parsed[0]["tags"] is not None

        options = {
            "mode": "AD_SAL",
            "emb_dim": "12",
            "hidden_boundary": "12",
            "hidden_unified": "12",
            "relations": "3",
            "epochs": "2",
            "batch_size": "8",
            "seeds": "1",
            "source_train": paths["source_train"],
            "target_train": paths["target_train"],
            "source_test": paths["source_test"],
            "target_test": paths["target_test"],
            "lexicon": paths["lexicon"],
        }
        checkpoint = os.path.join(tmp, "model.ckpt")
        log_path = os.path.join(tmp, "log.jsonl")
        result = crosstag.train(options, checkpoint=checkpoint, log=log_path)
        assert result["epochs"] == 2
        assert os.path.getsize(checkpoint) > 0
        with open(log_path) as fh:
            lines = [json.loads(line) for line in fh]
        assert "config" in lines[0]
        assert lines[1]["epoch"] == 1

        scores = crosstag.evaluate(checkpoint, paths["target_test"])
        assert set(scores["ads"].keys()) >= {"tp", "pred", "gold", "precision", "recall", "micro_f1"}

        out_path = os.path.join(tmp, "pred.conll")
        crosstag.predict(checkpoint, paths["target_test"], out_path)
        reparsed = crosstag.parse_conll(out_path)
        assert len(reparsed) == 8
        assert all(r["tags"] is not None for r in reparsed)

        attention = crosstag.inspect_attention(checkpoint, paths["target_test"])
        assert len(attention) == 8
        for hop_weights in attention[0]["alpha_a"]:
            assert abs(sum(hop_weights) - 1.0) < 1e-5
        assert len(attention[0]["alpha_a"]) == 2  # one entry per hop


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
