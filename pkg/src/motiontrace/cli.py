"""Command-line interface: score, augment, validate, descriptor, serve.

All batch commands stream line-delimited JSON. Predictions join to ground
truth by video_id (or --join-key); `--permissive` downgrades bad lines to
warnings instead of aborting.
"""

from __future__ import annotations

import argparse
import json
import sys

from .augment import DensifyConfig, augment_record
from .config import build_reward_config, load_toolkit_config
from .motion import MotionComputeError, Track, motion_descriptor
from .records import SchemaError, keyframes_from_obj, read_records, record_from_obj, write_records
from .rewards import ZERO_BREAKDOWN, score_detailed
from .service import _report_obj, _score_item, breakdown_obj, create_app
from .trace import validate_format


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _iter_jsonl(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if line.strip():
                yield lineno, line


def _reward_config(toolkit, args):
    overrides = {}
    if getattr(args, "sigma_floor", None) is not None:
        overrides["temporal_sigma_floor"] = args.sigma_floor
    if getattr(args, "sigma_fraction", None) is not None:
        overrides["temporal_sigma_fraction"] = args.sigma_fraction
    if getattr(args, "gate", None) is not None:
        overrides["spatial_gate"] = args.gate
    return build_reward_config(overrides, toolkit.reward)


def cmd_score(args) -> int:
    toolkit = load_toolkit_config(args.config)
    cfg = _reward_config(toolkit, args)
    key = args.join_key

    records = {}
    try:
        for lineno, line in _iter_jsonl(args.gt):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                return _fail(f"{args.gt}:{lineno}: invalid JSON: {exc}")
            if not isinstance(obj, dict) or key not in obj:
                return _fail(f"{args.gt}:{lineno}: missing join key {key!r}")
            try:
                records[obj[key]] = record_from_obj(obj)
            except SchemaError as exc:
                return _fail(f"{args.gt}:{lineno}: {exc}")
    except OSError as exc:
        return _fail(str(exc))

    sums: dict[str, float] = {}
    count = 0
    try:
        with open(args.output, "w", encoding="utf-8") as out:
            for lineno, line in _iter_jsonl(args.input):
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    return _fail(f"{args.input}:{lineno}: invalid JSON: {exc}")
                if not isinstance(obj, dict) or "prediction" not in obj:
                    if args.permissive:
                        print(f"warning: {args.input}:{lineno}: no prediction field, "
                              "scoring zeros", file=sys.stderr)
                        response = {"breakdown": breakdown_obj(ZERO_BREAKDOWN),
                                    "diagnostics": None, "per_object": {}}
                        _write_response(out, obj, key, response, sums)
                        count += 1
                        continue
                    return _fail(f"{args.input}:{lineno}: missing 'prediction' field")
                record = records.get(obj.get(key))
                if record is None:
                    if args.permissive:
                        print(f"warning: {args.input}:{lineno}: no record for "
                              f"{key}={obj.get(key)!r}, scoring zeros", file=sys.stderr)
                        response = {"breakdown": breakdown_obj(ZERO_BREAKDOWN),
                                    "diagnostics": None, "per_object": {}}
                    else:
                        return _fail(f"{args.input}:{lineno}: no ground-truth record "
                                     f"for {key}={obj.get(key)!r}")
                else:
                    response = _score_item(obj["prediction"], record,
                                           obj.get("masked_prediction"), cfg)
                _write_response(out, obj, key, response, sums)
                count += 1
    except OSError as exc:
        return _fail(str(exc))

    if count:
        summary = " ".join(f"{name}={sums[name] / count:.4f}" for name in sorted(sums))
        print(f"scored {count} predictions: {summary}", file=sys.stderr)
    else:
        print("scored 0 predictions", file=sys.stderr)
    return 0


def _write_response(out, obj, key, response, sums) -> None:
    if isinstance(obj, dict) and key in obj:
        response = {key: obj[key], **response}
    for name, value in response["breakdown"].items():
        sums[name] = sums.get(name, 0.0) + value
    out.write(json.dumps(response, ensure_ascii=False))
    out.write("\n")


def cmd_augment(args) -> int:
    toolkit = load_toolkit_config(args.config)
    stride = args.stride if args.stride is not None else toolkit.densify.stride
    try:
        dcfg = DensifyConfig(stride=stride, interpolator=toolkit.densify.interpolator)
    except ValueError as exc:
        return _fail(str(exc))
    try:
        augmented = (
            augment_record(rec, dcfg, toolkit.reward.motion)
            for rec in read_records(args.input, permissive=args.permissive)
        )
        count = write_records(args.output, augmented)
    except (OSError, SchemaError) as exc:
        return _fail(str(exc))
    print(f"augmented {count} records", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    all_valid = True
    try:
        for lineno, line in _iter_jsonl(args.input):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                return _fail(f"{args.input}:{lineno}: invalid JSON: {exc}")
            if isinstance(obj, str):
                source = obj
            elif isinstance(obj, dict) and isinstance(obj.get("prediction"), str):
                source = obj["prediction"]
            else:
                return _fail(f"{args.input}:{lineno}: each line must be a JSON string "
                             "or an object with a 'prediction' field")
            report = validate_format(source)
            all_valid = all_valid and report.valid
            print(json.dumps(_report_obj(report), ensure_ascii=False))
    except OSError as exc:
        return _fail(str(exc))
    return 0 if all_valid else 1


def cmd_descriptor(args) -> int:
    toolkit = load_toolkit_config(args.config)
    try:
        for lineno, line in _iter_jsonl(args.input):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                return _fail(f"{args.input}:{lineno}: invalid JSON: {exc}")
            if not isinstance(obj, dict) or "samples" not in obj:
                return _fail(f"{args.input}:{lineno}: expected an object with 'samples'")
            try:
                keyframes = keyframes_from_obj(obj["samples"], "samples")
                track = Track(obj.get("object_name", "object"), keyframes)
                descriptor = motion_descriptor(track, toolkit.reward.motion)
            except (SchemaError, MotionComputeError, ValueError) as exc:
                return _fail(f"{args.input}:{lineno}: {exc}")
            print(json.dumps({
                "direction": descriptor.direction.value,
                "speed": descriptor.speed.value,
                "scale": descriptor.scale.value,
            }))
    except OSError as exc:
        return _fail(str(exc))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    toolkit = load_toolkit_config(args.config)
    port = args.port if args.port is not None else toolkit.port
    uvicorn.run(create_app(toolkit), host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motiontrace",
        description="Score, validate and augment motion-grounded reasoning traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="batch-score predictions against ground truth")
    p.add_argument("input", help="JSONL of {video_id, prediction, masked_prediction?}")
    p.add_argument("gt", help="JSONL of ground-truth records")
    p.add_argument("output", help="output JSONL of score responses")
    p.add_argument("--config", default=None)
    p.add_argument("--join-key", default="video_id")
    p.add_argument("--permissive", action="store_true",
                   help="score unmatched/broken lines as zeros instead of aborting")
    p.add_argument("--sigma-floor", type=float, default=None)
    p.add_argument("--sigma-fraction", type=float, default=None)
    p.add_argument("--gate", type=float, default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("augment", help="densify records and inject motion tags")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--config", default=None)
    p.add_argument("--stride", type=float, default=None)
    p.add_argument("--permissive", action="store_true",
                   help="skip malformed lines with a warning")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("validate", help="lint traces; exit 0 iff all valid")
    p.add_argument("input", help="JSONL: each line a JSON string or {prediction: ...}")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("descriptor", help="classify raw tracks into motion bins")
    p.add_argument("input", help="JSONL of {object_name?, samples: [{t, box}]}")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_descriptor)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
