import json
import sys
import threading

import pytest

from affordsim.agent import (
    ExternalReasoner,
    MalformedResponse,
    OracleReasoner,
    QueryContext,
    ReasonerVerdict,
    Timeout,
    VerdictState,
    serve_stub,
)
from affordsim.agent.protocol import (
    VERSION,
    build_request,
    parse_endpoint,
    parse_response,
    response_for,
    stub_answer,
)
from affordsim.runner import ReasonerConfig, RunConfig, run_episode
from affordsim.sim import Observation
from affordsim.world import AffordanceCategory

STUB = f"stdio:{sys.executable} -m affordsim stub-reasoner --mode"

ENTRY = {"id": "Microwave_0", "class": "Microwave", "open": False, "inside": None}
OBS = Observation("loc1", (ENTRY,), None, 4)
LATENT = Observation("loc1", ({**ENTRY, "clean": True, "used": False, "busy": 7},), None, 4)


def probe():
    return LATENT


def test_request_fields():
    req = build_request("Microwave_0", "Microwave", OBS, QueryContext("ep1", 4))
    assert set(req) == {"v", "episode", "step", "target", "candidates", "observation", "references"}
    assert req["v"] == VERSION and req["target"] == {"id": "Microwave_0", "class": "Microwave"}
    assert req["candidates"] == ["available", "unavailable"]
    assert set(req["references"]) == {"available", "unavailable"}
    assert "busy" not in json.dumps(req["observation"])
    shared = build_request("Microwave_0", "Microwave", OBS, QueryContext("ep1", 4), {"busy": 7})
    assert shared["oracle"] == {"busy": 7}


@pytest.mark.parametrize("line", [
    b"not json",
    b'{"state":"available","confidence":1}',
    b'{"v":2,"state":"available","confidence":1}',
    b'{"v":1,"state":"maybe","confidence":1}',
    b'{"v":1,"state":"unavailable","confidence":1}',
    b'{"v":1,"state":"unavailable","category":"Sticky","confidence":1}',
    b'{"v":1,"state":"available","confidence":1.5}',
    b'{"v":1,"state":"available","confidence":true}',
    b'[1]',
])
def test_parse_response_is_strict(line):
    with pytest.raises(MalformedResponse):
        parse_response(line)


@pytest.mark.parametrize("verdict", [
    ReasonerVerdict(VerdictState.AVAILABLE, None, 0.7),
    ReasonerVerdict(VerdictState.UNAVAILABLE, AffordanceCategory.DIRTY, 1.0),
    ReasonerVerdict(VerdictState.UNAVAILABLE, AffordanceCategory.OCCUPIED, 0.25),
])
def test_response_round_trip(verdict):
    assert parse_response(json.dumps(response_for(verdict))) == verdict


def test_stub_modes():
    req = json.dumps(build_request("Microwave_0", "Microwave", OBS, QueryContext("e", 0), {"busy": 3}))
    assert parse_response(stub_answer("oracle", req)).category is AffordanceCategory.OCCUPIED
    assert parse_response(stub_answer("always-available", req)).available
    assert stub_answer("silent", req) is None
    with pytest.raises(MalformedResponse):
        parse_response(stub_answer("malformed", req))
    with pytest.raises(ValueError):
        serve_stub("chatty")


def test_parse_endpoint():
    assert parse_endpoint("stdio:python x.py") == ("stdio", "python x.py")
    assert parse_endpoint("tcp://127.0.0.1:9000") == ("tcp", ("127.0.0.1", 9000))
    with pytest.raises(ValueError):
        parse_endpoint("http://x")


def test_stdio_loopback_matches_oracle():
    ext = ExternalReasoner(f"{STUB} oracle", share_latent=True)
    try:
        got = ext.reason("Microwave_0", OBS, QueryContext("e", 4), probe)
        again = ext.reason("Microwave_0", OBS, QueryContext("e", 5), probe)
    finally:
        ext.close()
    want = OracleReasoner().reason("Microwave_0", OBS, QueryContext("e", 4), probe)
    assert got == want == again


def test_not_visible_never_hits_the_wire():
    ext = ExternalReasoner("stdio:/nonexistent/binary")
    assert ext.reason("Ghost_0", OBS, QueryContext("e", 0), probe).state is VerdictState.NOT_VISIBLE


def test_stdio_malformed_and_silent():
    bad = ExternalReasoner(f"{STUB} malformed")
    try:
        with pytest.raises(MalformedResponse):
            bad.reason("Microwave_0", OBS, QueryContext("e", 0), probe)
    finally:
        bad.close()
    quiet = ExternalReasoner(f"{STUB} silent", timeout=0.5)
    try:
        with pytest.raises(Timeout):
            quiet.reason("Microwave_0", OBS, QueryContext("e", 0), probe)
    finally:
        quiet.close()


@pytest.fixture
def tcp_stub():
    ready = threading.Event()
    where = {}

    def on_ready(ep):
        where["ep"] = ep
        ready.set()

    t = threading.Thread(target=serve_stub, args=("oracle", "127.0.0.1:0", on_ready), daemon=True)
    t.start()
    assert ready.wait(5)
    return where["ep"]


def test_tcp_loopback(tcp_stub):
    ext = ExternalReasoner(tcp_stub, share_latent=True)
    try:
        v = ext.reason("Microwave_0", OBS, QueryContext("e", 0), probe)
    finally:
        ext.close()
    assert v.category is AffordanceCategory.OCCUPIED


def _dynamic(small_ds):
    return next(e for e in small_ds.select(mode="dynamic")
                if any(small_ds.scene(e).objects[i.object_id].klass.dynamic for i in e.injections))


@pytest.mark.parametrize("mode,code", [("malformed", "malformed"), ("silent", "timeout")])
def test_episode_aborts_on_reasoner_errors(small_ds, mode, code):
    e = _dynamic(small_ds)
    cfg = RunConfig(reasoner=ReasonerConfig("external", endpoint=f"{STUB} {mode}", timeout=0.5))
    run = run_episode(small_ds.scene(e), e, cfg)
    assert run.result.abort == code and run.result.success == 0


def test_tcp_episode_matches_oracle(small_ds, tcp_stub):
    e = _dynamic(small_ds)
    ext = run_episode(small_ds.scene(e), e, RunConfig(
        reasoner=ReasonerConfig("external", endpoint=tcp_stub, share_latent=True)))
    ref = run_episode(small_ds.scene(e), e, RunConfig())
    assert ext.trajectory.to_jsonl() == ref.trajectory.to_jsonl()
