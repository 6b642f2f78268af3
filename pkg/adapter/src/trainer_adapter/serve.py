"""Request loop: read JSON lines, answer each with epochs then a terminal line.

Every request gets exactly one terminal line: {"done":true} after the last
epoch, or {"error":...}. Value problems (unknown table key, epochs=0) are
reported on the stream and serving continues; a request that does not follow
the protocol shape at all is answered with an error line and ends the
process with exit code 2, since the peer is evidently not speaking the
protocol.
"""

import json
import sys

from .config import AdapterConfig
from .finetune import serve_finetune
from .table import StubTable

_FIELD_TYPES = {
    "cmd": str,
    "train": str,
    "valid": str,
    "test": str,
    "lr": (int, float),
    "batch_size": int,
    "epochs": int,
    "seed": int,
    "max_tokens": int,
    "strategy": str,
}


class MalformedRequest(Exception):
    """Line that does not follow the wire protocol shape."""


def encode(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def parse_request(line: str) -> dict:
    try:
        req = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRequest(f"request is not valid JSON: {exc}") from None
    if not isinstance(req, dict):
        raise MalformedRequest("request must be a JSON object")
    for field, types in _FIELD_TYPES.items():
        if field not in req:
            raise MalformedRequest(f"request lacks {field!r}")
        if not isinstance(req[field], types) or isinstance(req[field], bool):
            raise MalformedRequest(f"request field {field!r} has the wrong type")
    if req["cmd"] != "train":
        raise MalformedRequest(f"unknown command {req['cmd']!r}")
    return req


def _invalid_value(req: dict) -> str | None:
    if req["epochs"] < 1:
        return "epochs must be positive"
    if req["batch_size"] < 1:
        return "batch_size must be positive"
    if req["lr"] <= 0:
        return "lr must be positive"
    return None


def serve(config: AdapterConfig, source=None, sink=None) -> int:
    """Serves requests until the input stream closes; returns the exit code."""
    if config.mode == "finetune":
        return serve_finetune(config, source, sink)
    table = StubTable.load(config.table)
    source = sys.stdin if source is None else source
    sink = sys.stdout if sink is None else sink

    for line in source:
        if not line.strip():
            continue
        try:
            req = parse_request(line)
        except MalformedRequest as exc:
            _emit(sink, {"error": str(exc)})
            return 2
        problem = _invalid_value(req)
        if problem is not None:
            _emit(sink, {"error": problem})
            continue
        curves = table.lookup(req["lr"], req["batch_size"], req["epochs"],
                              req["seed"])
        if curves is None:
            _emit(sink, {"error": "fixture miss"})
            continue
        f1s, losses = curves
        for epoch, (f1, loss) in enumerate(zip(f1s, losses), start=1):
            _emit(sink, {"epoch": epoch, "f1_test": f1, "valid_loss": loss})
        _emit(sink, {"done": True})
    return 0


def _emit(sink, obj: dict) -> None:
    sink.write(encode(obj) + "\n")
    sink.flush()
