import json

import numpy as np
import pytest

from teachkit.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from teachkit.core import load_hypotheses, load_teaching_set, write_dataset

from conftest import gaussian_blobs, make_dataset


@pytest.fixture
def dataset_file(tmp_path):
    rng = np.random.default_rng(21)
    feats, labels = gaussian_blobs(rng, [[2.5, 0.0], [-2.5, 0.0], [0.0, 3.0]], 12, 0.5)
    overrides = rng.uniform(0.05, 0.5, size=len(labels))
    ds = make_dataset(feats, labels, class_names=("north", "south", "east"), overrides=overrides)
    path = tmp_path / "ds.json"
    write_dataset(ds, path)
    return path


def _gen(tmp_path, dataset_file, out_name="hyp.json", num=30, extra=()):
    out = tmp_path / out_name
    code = main(
        [
            "gen-hyp",
            "--dataset", str(dataset_file),
            "--out", str(out),
            "--num", str(num),
            "--seed", "5",
            "--svm-epochs", "40",
            *extra,
        ]
    )
    return code, out


def test_gen_hyp_writes_requested_count(tmp_path, dataset_file):
    code, out = _gen(tmp_path, dataset_file, num=100)
    assert code == EXIT_OK
    space = load_hypotheses(out)
    assert len(space) == 100


def test_gen_hyp_missing_dataset_is_usage_error(capsys):
    assert main(["gen-hyp", "--out", "x.json", "--seed", "1"]) == EXIT_USAGE
    assert "usage error" in capsys.readouterr().err


def test_gen_hyp_target_below_deterministic_is_data_error(tmp_path, dataset_file, capsys):
    code, _ = _gen(tmp_path, dataset_file, num=3)
    assert code == EXIT_DATA
    assert "data error" in capsys.readouterr().err


def test_gen_hyp_requires_seed(tmp_path, dataset_file):
    out = tmp_path / "h.json"
    code = main(["gen-hyp", "--dataset", str(dataset_file), "--out", str(out)])
    assert code == EXIT_USAGE


def test_gen_hyp_byte_identical_reruns(tmp_path, dataset_file):
    _, a = _gen(tmp_path, dataset_file, out_name="a.json")
    _, b = _gen(tmp_path, dataset_file, out_name="b.json")
    assert a.read_bytes() == b.read_bytes()


@pytest.fixture
def pipeline(tmp_path, dataset_file):
    _, hyp = _gen(tmp_path, dataset_file)
    return dataset_file, hyp


def _select(tmp_path, pipeline, name, strategy, extra=()):
    ds, hyp = pipeline
    out = tmp_path / name
    code = main(
        [
            "select",
            "--dataset", str(ds),
            "--hypotheses", str(hyp),
            "--out", str(out),
            "--strategy", strategy,
            "--budget", "5",
            "--seed", "9",
            *extra,
        ]
    )
    return code, out


def test_select_explain_inf_discounts_equals_strict(tmp_path, pipeline):
    code_a, a = _select(tmp_path, pipeline, "explain.json", "explain", ["--beta", "inf", "--gamma", "inf"])
    code_b, b = _select(tmp_path, pipeline, "strict.json", "strict")
    assert code_a == code_b == EXIT_OK
    assert load_teaching_set(a).item_ids == load_teaching_set(b).item_ids


def test_select_byte_identical_reruns(tmp_path, pipeline):
    _, a = _select(tmp_path, pipeline, "a.json", "explain")
    _, b = _select(tmp_path, pipeline, "b.json", "explain")
    assert a.read_bytes() == b.read_bytes()


def test_select_budget_exceeding_pool(tmp_path, pipeline, capsys):
    code, _ = _select(tmp_path, pipeline, "big.json", "strict", ["--budget", "500"])
    assert code == EXIT_DATA
    assert "data error" in capsys.readouterr().err


def test_select_rand_is_seed_deterministic(tmp_path, pipeline):
    _, a = _select(tmp_path, pipeline, "r1.json", "rand_im")
    _, b = _select(tmp_path, pipeline, "r2.json", "rand_im")
    assert a.read_bytes() == b.read_bytes()


def test_simulate_reproducible(tmp_path, pipeline):
    ds, hyp = pipeline
    outs = []
    for name in ("s1.json", "s2.json"):
        out = tmp_path / name
        code = main(
            [
                "simulate",
                "--dataset", str(ds),
                "--hypotheses", str(hyp),
                "--out", str(out),
                "--strategies", "strict,rand_im",
                "--learners", "20",
                "--budget", "5",
                "--seed", "13",
            ]
        )
        assert code == EXIT_OK
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    report = json.loads(outs[0].read_text())
    assert [r["strategy"] for r in report] == ["STRICT", "RAND_IM"]
    assert all(r["learners"] == 20 for r in report)


def test_difficulty_pipeline(tmp_path):
    ds = make_dataset([[0.0], [1.0], [2.0], [3.0]], [0, 0, 1, 1], class_names=("a", "b"))
    ds_path = tmp_path / "plain.json"
    write_dataset(ds, ds_path)
    fm = {
        "K": 1,
        "width": 2,
        "height": 1,
        "class_weights": [[1.0], [1.0]],
        "class_biases": [0.0, 0.0],
        "items": [
            {"id": "i0", "maps": [[0.0, 1.0]]},
            {"id": "i1", "maps": [[0.5, 1.0]]},
            {"id": "i2", "maps": [[1.0, 0.2]]},
            {"id": "i3", "maps": [[0.1, 0.9]]},
        ],
    }
    fm_path = tmp_path / "fm.json"
    fm_path.write_text(json.dumps(fm))
    out = tmp_path / "with_diff.json"
    code = main(
        ["difficulty", "--dataset", str(ds_path), "--feature-maps", str(fm_path), "--out", str(out)]
    )
    assert code == EXIT_OK
    enriched = json.loads(out.read_text())
    diffs = [rec["explanation"]["difficulty"] for rec in enriched["items"]]
    assert all(d > 0 for d in diffs)


def test_unknown_subcommand_is_usage(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
