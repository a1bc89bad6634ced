"""Stateless HTTP scoring service.

Endpoints:

* ``POST /v1/score``      — one ScoreRequest or a batch (JSON list); responses
  preserve request order and are bit-identical to in-process scoring.
* ``POST /v1/descriptor`` — classify a raw track into its motion bins.
* ``GET  /healthz``       — liveness plus a stable digest of the effective config.

Schema violations return 400 with the offending field path; oversized
batches return 413. Malformed *predictions* are not errors: they score zeros
with a 200, because training loops need a total reward function.
"""

from __future__ import annotations

import json
import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .config import ToolkitConfig, build_motion_config, build_reward_config, config_digest
from .motion import MotionComputeError, Track, motion_descriptor
from .records import SchemaError, keyframes_from_obj, record_from_obj
from .rewards import RewardBreakdown, score_detailed
from .trace import FormatReport


def _error(status: int, detail: str, field: str | None = None) -> JSONResponse:
    body: dict = {"detail": detail}
    if field:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _report_obj(report: FormatReport) -> dict:
    return {
        "valid": report.valid,
        "violations": [
            {"rule_id": v.rule_id, "span": list(v.span), "message": v.message}
            for v in report.violations
        ],
    }


def breakdown_obj(breakdown: RewardBreakdown) -> dict:
    return breakdown.as_dict()


def _parse_score_item(item, path: str, base_cfg) -> tuple[str, object, str | None, object]:
    if not isinstance(item, dict):
        raise SchemaError(path or "<root>", "score request must be an object")
    if "prediction" not in item:
        raise SchemaError(_p(path, "prediction"), "missing required field")
    prediction = item["prediction"]
    if not isinstance(prediction, str):
        raise SchemaError(_p(path, "prediction"), "prediction must be a string")
    if "record" not in item:
        raise SchemaError(_p(path, "record"), "missing required field")
    record = record_from_obj(item["record"], _p(path, "record"))
    masked = item.get("masked_prediction")
    if masked is not None and not isinstance(masked, str):
        raise SchemaError(_p(path, "masked_prediction"), "masked_prediction must be a string")
    overrides = item.get("config_overrides")
    if overrides is None:
        cfg = base_cfg
    else:
        if not isinstance(overrides, dict):
            raise SchemaError(_p(path, "config_overrides"), "config_overrides must be an object")
        try:
            cfg = build_reward_config(overrides, base_cfg)
        except (ValueError, TypeError) as exc:
            raise SchemaError(_p(path, "config_overrides"), str(exc)) from None
    unknown = set(item) - {"prediction", "record", "masked_prediction", "config_overrides"}
    if unknown:
        raise SchemaError(_p(path, sorted(unknown)[0]), "unknown field")
    return prediction, record, masked, cfg


def _p(path: str, leaf: str) -> str:
    return f"{path}.{leaf}" if path else leaf


def _score_item(prediction, record, masked, cfg) -> dict:
    breakdown, per_object, report = score_detailed(prediction, record, masked, cfg)
    return {
        "breakdown": breakdown_obj(breakdown),
        "diagnostics": _report_obj(report),
        "per_object": per_object,
    }


def create_app(config: ToolkitConfig | None = None) -> FastAPI:
    cfg = config if config is not None else ToolkitConfig()
    digest = config_digest(cfg)
    app = FastAPI(title="motiontrace reward service", version=__version__)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__, "config_digest": digest}

    @app.post("/v1/score")
    async def score_endpoint(request: Request):
        try:
            payload = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            return _error(400, f"request body is not valid JSON: {exc}")
        batch = isinstance(payload, list)
        items = payload if batch else [payload]
        if len(items) > cfg.batch_cap:
            return _error(413, f"batch of {len(items)} exceeds the cap of {cfg.batch_cap}")
        results = []
        for i, item in enumerate(items):
            path = f"[{i}]" if batch else ""
            try:
                prediction, record, masked, reward_cfg = _parse_score_item(
                    item, path, cfg.reward
                )
            except SchemaError as exc:
                return _error(400, exc.message, field=exc.field)
            results.append(_score_item(prediction, record, masked, reward_cfg))
        return results if batch else results[0]

    @app.post("/v1/descriptor")
    async def descriptor_endpoint(request: Request):
        try:
            payload = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            return _error(400, f"request body is not valid JSON: {exc}")
        if not isinstance(payload, dict):
            return _error(400, "descriptor request must be an object")
        name = payload.get("object_name", "object")
        if not isinstance(name, str) or not name.strip():
            return _error(400, "object_name must be a nonempty string", field="object_name")
        if "samples" not in payload:
            return _error(400, "missing required field", field="samples")
        try:
            keyframes = keyframes_from_obj(payload["samples"], "samples")
        except SchemaError as exc:
            return _error(400, exc.message, field=exc.field)
        overrides = payload.get("config_overrides")
        try:
            motion_cfg = build_motion_config(overrides, cfg.reward.motion)
        except (ValueError, TypeError) as exc:
            return _error(400, str(exc), field="config_overrides")
        unknown = set(payload) - {"object_name", "samples", "config_overrides"}
        if unknown:
            return _error(400, "unknown field", field=sorted(unknown)[0])
        try:
            track = Track(name, keyframes)
            descriptor = motion_descriptor(track, motion_cfg)
        except (MotionComputeError, ValueError) as exc:
            return _error(400, str(exc), field="samples")
        return {
            "direction": descriptor.direction.value,
            "speed": descriptor.speed.value,
            "scale": descriptor.scale.value,
        }

    return app
