import json

import numpy as np
import pytest

from teachkit.core import (
    Dataset,
    ExplanationMap,
    Item,
    Strategy,
    StepDiagnostic,
    TeachingSet,
    write_dataset,
    write_teaching_set,
)
from teachkit.service import (
    ServiceConfig,
    ServiceError,
    SessionService,
    replay_score,
)


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


def _build_dataset(n_classes=3, teach=4, extra=8):
    items = []
    idx = 0
    for c in range(n_classes):
        for _ in range(teach + extra):
            items.append(
                Item(
                    id=f"it{idx:03d}",
                    class_index=c,
                    features=np.array([float(idx), float(c)]),
                    explanation=ExplanationMap(
                        width=2, height=2, values=np.array([0.0, 0.5, 1.0, 0.25]), difficulty=0.2
                    ),
                    image_uri=f"imgs/{idx:03d}.png",
                )
            )
            idx += 1
    return Dataset(classes=tuple(f"class{c}" for c in range(n_classes)), d=2, items=tuple(items))


@pytest.fixture
def service_env(tmp_path):
    ds = _build_dataset()
    ds_path = tmp_path / "ds.json"
    write_dataset(ds, ds_path)
    teach_len = 4
    paths = {}
    for k, strategy in enumerate([Strategy.STRICT, Strategy.EXPLAIN, Strategy.RAND_IM]):
        ids = tuple(it.id for it in ds.items[k * teach_len : (k + 1) * teach_len])
        tset = TeachingSet(
            strategy=strategy,
            budget=teach_len,
            item_ids=ids,
            per_step=tuple(StepDiagnostic(i, 0.0, (0.0,)) for i in ids),
        )
        p = tmp_path / f"{strategy.value}.json"
        write_teaching_set(tset, p)
        paths[strategy.value] = str(p)
    config = ServiceConfig(
        dataset_path=str(ds_path),
        teaching_set_paths=paths,
        data_dir=str(tmp_path / "sessions"),
        teach_len=teach_len,
        test_len=3,
        seed=123,
    )
    clock = FakeClock()
    return ds, config, clock


def _make_service(config, clock):
    return SessionService(config, clock=clock)


def _run_full_session(service, clock, strategy="EXPLAIN", answer=lambda payload: 0):
    created = service.create_session(strategy)
    sid = created["session_id"]
    # tutorial
    nxt = service.next_item(sid)
    assert nxt["phase"] == "tutorial"
    service.respond(sid, 0, 0)
    feedbacks = []
    while True:
        nxt = service.next_item(sid)
        if nxt["phase"] == "done":
            break
        clock.advance(2.5)
        fb = service.respond(sid, nxt["index"], answer(nxt))
        feedbacks.append((nxt, fb))
    return sid, created, feedbacks


def test_create_with_unknown_strategy(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    with pytest.raises(ServiceError) as err:
        service.create_session("BOGUS")
    assert err.value.status == 400
    with pytest.raises(ServiceError):
        service.create_session("RAND_EXP")  # valid name, not configured


def test_create_random_assignment_is_seeded(service_env):
    _, config, clock = service_env
    first = [_make_service(config, FakeClock()).create_session("random")["strategy"] for _ in range(3)]
    second = []
    svc = None
    for _ in range(3):
        svc = _make_service(config, FakeClock())
        second.append(svc.create_session("random")["strategy"])
    assert first == second  # same seed, same assignment sequence per fresh service


def test_phase_machine_and_result(service_env):
    ds, config, clock = service_env
    service = _make_service(config, clock)
    sid, created, feedbacks = _run_full_session(service, clock, "EXPLAIN")
    phases = [n["phase"] for n, _ in feedbacks]
    assert phases == ["teaching"] * 4 + ["testing"] * 3
    done = service.next_item(sid)
    assert done["phase"] == "done"
    result = service.result(sid)
    assert result["strategy"] == "EXPLAIN"
    assert 0.0 <= result["accuracy"] <= 1.0
    teach_item_ids = {r["item_id"] for r in result["responses"] if r["phase"] == "teaching"}
    tset_ids = set(json.load(open(config.teaching_set_paths["EXPLAIN"]))["item_ids"])
    assert teach_item_ids == tset_ids
    confusion_total = sum(sum(row) for row in result["confusion"])
    assert confusion_total == config.test_len


def test_result_accuracy_fractions(service_env):
    ds, config, clock = service_env
    service = _make_service(config, clock)

    def perfect(payload):  # derive the truth from the dataset (test-side only)
        if payload["phase"] == "teaching":
            return ds.item_by_id(payload["item_id"]).class_index
        uri = payload["image_uri"]
        match = next(it for it in ds.items if it.image_uri == uri)
        return match.class_index

    sid, _, _ = _run_full_session(service, clock, "STRICT", answer=perfect)
    assert service.result(sid)["accuracy"] == 1.0

    def always_wrong(payload):
        return (perfect(payload) + 1) % ds.num_classes

    sid2, _, _ = _run_full_session(service, clock, "STRICT", answer=always_wrong)
    assert service.result(sid2)["accuracy"] == 0.0


def test_next_item_idempotent_until_respond(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid = service.create_session("STRICT")["session_id"]
    assert service.next_item(sid) == service.next_item(sid)
    service.respond(sid, 0, 0)
    a = service.next_item(sid)
    b = service.next_item(sid)
    assert a == b
    assert a["phase"] == "teaching" and a["index"] == 0


def test_teaching_feedback_payload_fields(service_env):
    ds, config, clock = service_env
    service = _make_service(config, clock)
    for strategy, expect_show in [("STRICT", False), ("EXPLAIN", True), ("RAND_IM", False)]:
        sid = service.create_session(strategy)["session_id"]
        service.next_item(sid)
        service.respond(sid, 0, 0)
        nxt = service.next_item(sid)
        fb = service.respond(sid, 0, 1)
        assert fb["phase"] == "teaching"
        assert fb["alternate_ms"] == 500
        assert fb["min_wait_ms"] == 2000
        assert fb["show_explanation"] is expect_show
        assert fb["correct_class"] == ds.item_by_id(nxt["item_id"]).class_index
        if expect_show:
            assert fb["explanation"]["width"] == 2
            assert len(fb["explanation"]["values"]) == 4
        else:
            assert fb["explanation"] is None


def test_testing_payloads_leak_nothing(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid, _, feedbacks = _run_full_session(service, clock, "EXPLAIN")
    forbidden = {"correct", "correct_class", "correct_class_name", "explanation", "item_id"}
    for nxt, fb in feedbacks:
        if nxt["phase"] != "testing":
            continue
        assert fb == {"acknowledged": True}
        assert not (set(nxt.keys()) & forbidden)


def test_button_order_fixed_within_and_shuffled_across(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid, created, feedbacks = _run_full_session(service, clock, "EXPLAIN")
    orders = {tuple(o["value"] for o in n["options"]) for n, _ in feedbacks}
    assert len(orders) == 1  # constant within the session
    seen = set()
    for _ in range(100):
        payload = service.create_session("STRICT")
        seen.add(tuple(o["value"] for o in payload["options"]))
    assert len(seen) > 1  # shuffled across sessions


def test_test_sequences_differ_across_sessions(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sequences = set()
    for _ in range(100):
        sid = service.create_session("STRICT")["session_id"]
        sequences.add(tuple(service.sessions[sid].test_ids))
    assert len(sequences) > 1


def test_too_fast_response_rejected(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid = service.create_session("STRICT")["session_id"]
    service.next_item(sid)
    service.respond(sid, 0, 0)  # tutorial ack; no lockout yet
    service.next_item(sid)
    service.respond(sid, 0, 0)  # first teaching feedback at t0
    service.next_item(sid)
    clock.advance(1.2)
    with pytest.raises(ServiceError) as err:
        service.respond(sid, 1, 0)
    assert err.value.code == "too_fast"
    assert err.value.status == 429
    clock.advance(0.9)  # now 2.1 s since feedback
    assert service.respond(sid, 1, 0)["phase"] == "teaching"


def test_stale_and_out_of_order_responses(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid = service.create_session("STRICT")["session_id"]
    with pytest.raises(ServiceError) as err:
        service.respond(sid, 0, 0)  # nothing served yet
    assert err.value.code == "out_of_order"
    service.next_item(sid)
    service.respond(sid, 0, 0)
    service.next_item(sid)
    clock.advance(3)
    service.respond(sid, 0, 1)
    with pytest.raises(ServiceError) as err:
        service.respond(sid, 0, 1)  # replay of the same index
    assert err.value.code == "stale_index"
    assert err.value.status == 409


def test_invalid_choice_rejected(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid = service.create_session("STRICT")["session_id"]
    service.next_item(sid)
    with pytest.raises(ServiceError) as err:
        service.respond(sid, 0, 99)
    assert err.value.code == "invalid_choice"


def test_unknown_session_404(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    for call in (service.next_item, service.result):
        with pytest.raises(ServiceError) as err:
            call("nope")
        assert err.value.status == 404


def test_result_requires_done(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid = service.create_session("STRICT")["session_id"]
    with pytest.raises(ServiceError) as err:
        service.result(sid)
    assert err.value.code == "not_finished"


def test_sessions_do_not_interleave_state(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    a = service.create_session("STRICT")["session_id"]
    b = service.create_session("EXPLAIN")["session_id"]
    service.next_item(a)
    service.next_item(b)
    service.respond(a, 0, 0)
    assert service.sessions[a].phase == "teaching"
    assert service.sessions[b].phase == "tutorial"
    service.respond(b, 0, 0)
    service.next_item(a)
    service.respond(a, 0, 1)
    assert service.sessions[a].cursor == 1
    assert service.sessions[b].cursor == 0


def test_log_replay_reconstructs_score(service_env, tmp_path):
    ds, config, clock = service_env
    service = _make_service(config, clock)
    sid, _, _ = _run_full_session(service, clock, "EXPLAIN")
    expected = service.result(sid)["accuracy"]
    log_lines = (service.data_dir / f"{sid}.jsonl").read_text().splitlines()
    replay = replay_score(log_lines, config.teach_len, config.test_len)
    assert replay["accuracy"] == expected
    assert replay["phase"] == "done"


def test_restart_rebuilds_sessions(service_env):
    _, config, clock = service_env
    service = _make_service(config, clock)
    sid, _, _ = _run_full_session(service, clock, "STRICT")
    partial = service.create_session("STRICT")["session_id"]
    service.next_item(partial)
    service.respond(partial, 0, 0)
    service.next_item(partial)
    clock.advance(3)
    service.respond(partial, 0, 2)

    reborn = _make_service(config, clock)
    assert reborn.sessions[sid].phase == "done"
    assert reborn.result(sid)["accuracy"] == service.result(sid)["accuracy"]
    state = reborn.sessions[partial]
    assert state.phase == "teaching" and state.cursor == 1
    # respond without re-fetching is out of order after a restart
    with pytest.raises(ServiceError):
        reborn.respond(partial, 1, 0)
    nxt = reborn.next_item(partial)
    assert nxt["index"] == 1
    clock.advance(3)
    assert reborn.respond(partial, 1, 0)["phase"] == "teaching"


def test_http_wrapper_round_trip(service_env):
    from fastapi.testclient import TestClient

    from teachkit.service import create_app

    ds, config, clock = service_env
    service = _make_service(config, clock)
    client = TestClient(create_app(service))
    created = client.post("/api/sessions", json={"strategy": "EXPLAIN"})
    assert created.status_code == 201
    sid = created.json()["session_id"]
    nxt = client.get(f"/api/sessions/{sid}/next")
    assert nxt.status_code == 200
    assert nxt.json()["phase"] == "tutorial"
    ack = client.post(f"/api/sessions/{sid}/respond", json={"index": 0, "choice": 0})
    assert ack.json()["acknowledged"] is True
    while True:
        payload = client.get(f"/api/sessions/{sid}/next").json()
        if payload["phase"] == "done":
            break
        clock.advance(2.5)
        client.post(
            f"/api/sessions/{sid}/respond", json={"index": payload["index"], "choice": 0}
        )
    result = client.get(f"/api/sessions/{sid}/result")
    assert result.status_code == 200
    assert "accuracy" in result.json()
    missing = client.get("/api/sessions/nope/next")
    assert missing.status_code == 404
    assert missing.json()["error"] == "unknown_session"


def test_service_config_from_file(tmp_path, service_env):
    _, config, clock = service_env
    cfg_path = tmp_path / "svc.json"
    cfg_path.write_text(
        json.dumps(
            {
                "dataset": config.dataset_path,
                "teaching_sets": config.teaching_set_paths,
                "data_dir": str(tmp_path / "data"),
                "port": 9911,
                "teach_len": 4,
                "test_len": 3,
                "seed": 5,
            }
        )
    )
    loaded = ServiceConfig.from_file(cfg_path)
    assert loaded.port == 9911
    assert loaded.teach_len == 4
    assert loaded.alternate_ms == 500 and loaded.min_wait_ms == 2000
    service = SessionService(loaded, clock=clock)
    assert service.create_session("STRICT")["phase"] == "tutorial"
