"""Line-delimited JSON trace files.

One JSON object per line: a leading ``config`` record, then ``event`` and
``message`` records, then a trailing ``meta`` record.  Round-trips are
exact (all times are integer microseconds).
"""
from __future__ import annotations

import json
from pathlib import Path

from .detectors import ContextReading, EventId
from .simulate import SimConfig, Trace, TraceEvent, TraceMessage


class TraceFormatError(ValueError):
    pass


def _config_record(config: SimConfig) -> dict:
    return {
        "type": "config",
        "nodes": config.nodes,
        "instances_per_node": config.instances_per_node,
        "events_per_process": config.events_per_process,
        "event_lifespan_us": list(config.event_lifespan_us),
        "message_delay_us": list(config.message_delay_us),
        "inter_event_gap_us": list(config.inter_event_gap_us),
        "start_jitter_us": config.start_jitter_us,
        "error_rate": config.error_rate,
        "stay_mean_us": config.stay_mean_us,
        "users": config.users,
        "rooms": config.rooms,
        "peer_fanout": config.peer_fanout,
        "seed": config.seed,
    }


def _parse_config(rec: dict) -> SimConfig:
    return SimConfig(
        nodes=rec["nodes"],
        instances_per_node=rec["instances_per_node"],
        events_per_process=rec["events_per_process"],
        event_lifespan_us=tuple(rec["event_lifespan_us"]),
        message_delay_us=tuple(rec["message_delay_us"]),
        inter_event_gap_us=tuple(rec["inter_event_gap_us"]),
        start_jitter_us=rec["start_jitter_us"],
        error_rate=rec["error_rate"],
        stay_mean_us=rec["stay_mean_us"],
        users=rec["users"],
        rooms=rec["rooms"],
        peer_fanout=rec["peer_fanout"],
        seed=rec["seed"],
    )


def save_trace(trace: Trace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(_config_record(trace.config), sort_keys=True) + "\n")
        for ev in trace.events:
            rec = {
                "type": "event",
                "id": [ev.id.process, ev.id.seq],
                "process": ev.process,
                "start_us": ev.start_us,
                "end_us": ev.end_us,
                "reading": None
                if ev.reading is None
                else {
                    "user": ev.reading.user,
                    "location": ev.reading.location,
                    "true_location": ev.reading.true_location,
                    "erroneous": ev.reading.erroneous,
                },
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        for m in trace.messages:
            rec = {
                "type": "message",
                "from": [m.from_event.process, m.from_event.seq],
                "to": [m.to_event.process, m.to_event.seq],
                "send_us": m.send_us,
                "deliver_us": m.deliver_us,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        fh.write(
            json.dumps({"type": "meta", "dropped_messages": trace.dropped_messages}) + "\n"
        )


def load_trace(path: str | Path) -> Trace:
    path = Path(path)
    config = None
    events: list[TraceEvent] = []
    messages: list[TraceMessage] = []
    dropped = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            kind = rec.get("type")
            if kind == "config":
                config = _parse_config(rec)
            elif kind == "event":
                reading = rec.get("reading")
                events.append(
                    TraceEvent(
                        id=EventId(*rec["id"]),
                        process=rec["process"],
                        start_us=rec["start_us"],
                        end_us=rec["end_us"],
                        reading=None
                        if reading is None
                        else ContextReading(
                            user=reading["user"],
                            location=reading["location"],
                            true_location=reading["true_location"],
                            erroneous=reading["erroneous"],
                        ),
                    )
                )
            elif kind == "message":
                messages.append(
                    TraceMessage(
                        from_event=EventId(*rec["from"]),
                        to_event=EventId(*rec["to"]),
                        send_us=rec["send_us"],
                        deliver_us=rec["deliver_us"],
                    )
                )
            elif kind == "meta":
                dropped = rec.get("dropped_messages", 0)
            else:
                raise TraceFormatError(f"{path}:{lineno}: unknown record type {kind!r}")
    if config is None:
        raise TraceFormatError(f"{path}: missing config record")
    if not events:
        raise TraceFormatError(f"{path}: trace has no events")
    return Trace(tuple(events), tuple(messages), config, dropped)
