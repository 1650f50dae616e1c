import json

import pytest

from laycrit.cli import main
from laycrit.data import bundled_suite
from laycrit.grpo import PolicyParams
from laycrit.layout import emit_dual_output, serialize_spec


@pytest.fixture
def canvas(tmp_path):
    spec, ref = bundled_suite()[2]
    (tmp_path / "s.json").write_text(serialize_spec(spec))
    (tmp_path / "l.json").write_text(json.dumps(ref.to_json_obj()))
    (tmp_path / "full.txt").write_text(emit_dual_output(ref, "reasoning"))
    return tmp_path


def test_score(canvas, capsys):
    assert main(["score", "--spec", str(canvas / "s.json"), "--layout", str(canvas / "l.json"),
                 "--reference", str(canvas / "l.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["parse_status"] == "VALID" and out["iou"] == 1.0
    assert set(out) >= {"format", "icr", "align", "dist", "spacing", "underlay", "quality", "total"}


def test_score_full_response_and_custom_weights(canvas, capsys):
    assert main(["score", "--spec", str(canvas / "s.json"), "--layout", str(canvas / "full.txt"),
                 "--weights", "0.2,0.8,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["total"] == pytest.approx(0.2 + 0.8 * out["quality"])


def test_score_bad_layout_gets_format_credit(canvas, capsys):
    (canvas / "bad.txt").write_text("no blocks at all")
    assert main(["score", "--spec", str(canvas / "s.json"), "--layout", str(canvas / "bad.txt")]) == 0
    out = json.loads(capsys.readouterr().out)
    # a bare body is wrapped in a layout block, so free text fails JSON parsing
    assert out["parse_status"] == "BAD_JSON"
    assert out["total"] == pytest.approx(0.1 * 0.2)
    assert out["quality"] == 0.0


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["score", "--spec", "x.json"]) == 1
    assert main(["score", "--spec", "a", "--layout", "b", "--weights", "nonsense"]) == 1


def test_runtime_error_exit_code(tmp_path, capsys):
    assert main(["score", "--spec", str(tmp_path / "missing.json"), "--layout", "x"]) == 2
    assert "error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_gen_evaluate(tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    assert main(["gen", "--mode", "designed", "--count", "20", "--seed", "1", "--out", str(data)]) == 0
    assert main(["evaluate", "--data", str(data), "--json", "-"]) == 0
    agg = json.loads(capsys.readouterr().out)
    assert agg["n_layouts"] == 20 and agg["ove"] <= 0.01 and agg["und"] >= 0.95


def test_evaluate_strict(tmp_path):
    data = tmp_path / "d.jsonl"
    data.write_text('{"id": "x"}\n')
    assert main(["evaluate", "--data", str(data), "--strict"]) == 2


def test_train_zero_iters_keeps_init(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--iters", "0", "--out", str(out)]) == 0
    init = PolicyParams.from_json((out / "init_params.json").read_text())
    final = PolicyParams.from_json((out / "params.json").read_text())
    assert final.distance(init) == 0.0
    out2 = tmp_path / "run2"
    assert main(["train", "--iters", "0", "--init", str(out / "params.json"), "--out", str(out2)]) == 0
    assert (out2 / "params.json").read_text() == (out / "params.json").read_text()


def test_train_short_run_logs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--iters", "5", "--no-reference", "--out", str(out)]) == 0
    rows = [json.loads(line) for line in (out / "log.jsonl").read_text().splitlines()]
    assert [r["iteration"] for r in rows] == list(range(5))
    assert "iou" not in rows[0] and "align" in rows[0]


def test_ablate_four_rows(tmp_path, capsys):
    data = tmp_path / "synth.jsonl"
    assert main(["gen", "--count", "3", "--seed", "2", "--out", str(data)]) == 0
    capsys.readouterr()
    assert main(["ablate", "--suite", str(data), "--iters", "3", "--out", str(tmp_path / "a.json")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["format_focused", "quality_focused", "iou_focused", "balanced_hybrid"]


def test_render_from_data(tmp_path):
    data = tmp_path / "d.jsonl"
    main(["gen", "--count", "2", "--out", str(data)])
    svg = tmp_path / "o.svg"
    assert main(["render", "--data", str(data), "--index", "1", "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")
    assert main(["render", "--data", str(data), "--index", "9"]) == 2
    assert main(["render"]) == 1
