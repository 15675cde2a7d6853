import pytest

from snapdetect.simulate import SimConfig, generate_trace
from snapdetect.tracefile import TraceFormatError, load_trace, save_trace


def test_roundtrip_is_exact(tmp_path):
    trace = generate_trace(
        SimConfig(nodes=3, instances_per_node=2, events_per_process=4, seed=9)
    )
    path = tmp_path / "trace.jsonl"
    save_trace(trace, path)
    assert load_trace(path) == trace


def test_missing_config_record(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"type": "meta", "dropped_messages": 0}\n')
    with pytest.raises(TraceFormatError):
        load_trace(path)


def test_bad_json_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("not json\n")
    with pytest.raises(TraceFormatError, match=":1:"):
        load_trace(path)


def test_unknown_record_type(tmp_path):
    trace = generate_trace(SimConfig(nodes=2, instances_per_node=1, events_per_process=1, seed=1))
    path = tmp_path / "trace.jsonl"
    save_trace(trace, path)
    path.write_text(path.read_text() + '{"type": "surprise"}\n')
    with pytest.raises(TraceFormatError, match="unknown record type"):
        load_trace(path)
