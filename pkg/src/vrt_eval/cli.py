"""Command-line front-end.

Subcommands: evaluate, validate, reward, report, convert-box. Exit
codes: 0 success, 1 usage error, 2 data error. ``VRT_EVAL_JOBS`` sets
the default worker count; ``--config`` points at a JSON file with
RunConfig fields, and explicit flags win over it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from .benchmark import load_manifest, sample_from_record
from .errors import VrtEvalError
from .evaluate import FORMATS, RunConfig, emit_report, evaluate_predictions
from .masks import BinaryMask, RleCounts, decode_rle, encode_rle, tight_box
from .metrics import MetricsReport
from .parsing import parse_model_output
from .rewards import total_reward

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the documented usage code is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _jobs_default() -> int:
    value = os.environ.get("VRT_EVAL_JOBS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--tau", type=float, default=None, help="match threshold")
    p.add_argument("--mode", choices=("mask", "box"), default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="unmatched-mask penalty for the IoU reward")
    p.add_argument("--lq-agg", dest="lq_aggregation",
                   choices=("macro", "micro"), default=None)
    p.add_argument("--reward-scope", dest="reward_gt_scope",
                   choices=("answer_only", "joint"), default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--format", dest="output_format", choices=FORMATS, default=None)
    p.add_argument("--config", default=None, help="JSON file with default options")


def _build_config(args) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as err:
            raise VrtEvalError(f"cannot read config {args.config}: {err}") from err
        unknown = set(values) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise VrtEvalError(f"unknown config keys: {sorted(unknown)}")
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    values.setdefault("jobs", _jobs_default())
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as err:
        raise VrtEvalError(f"bad configuration: {err}") from err


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_evaluate(args) -> int:
    config = _build_config(args)
    result = evaluate_predictions(args.manifest, args.predictions, config)
    for line in result.diagnostics:
        print(f"diagnostic: {line}", file=sys.stderr)
    _write_out(emit_report(result.report, config.output_format), args.out)
    return 0


def _cmd_validate(args) -> int:
    bench = load_manifest(args.manifest)
    counts = bench.computed_counts()
    status = "declared counts verified" if bench.declared_counts else "no declared counts"
    print(f"{args.manifest}: {len(bench)} samples ({status})")
    for key, value in counts.to_json().items():
        print(f"  {key}: {value}")
    return 0


def _resolve_gt(obj, manifest):
    if isinstance(obj, str):
        if manifest is None:
            raise VrtEvalError(
                f"gt reference {obj!r} needs --manifest to resolve against"
            )
        sample = manifest.get(obj)
        if sample is None:
            raise VrtEvalError(f"gt reference {obj!r} not found in manifest")
        return sample
    return sample_from_record(obj)


def _cmd_reward(args) -> int:
    config = _build_config(args)
    manifest = load_manifest(args.manifest) if args.manifest else None
    lines = []
    for lineno, line in enumerate(
        Path(args.requests).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            masks = [decode_rle(RleCounts.from_json(m)) for m in req["masks"]]
            gt = _resolve_gt(req["gt"], manifest)
            parsed = parse_model_output(req["raw_text"], masks)
            breakdown = total_reward(parsed, gt, lam=config.lam,
                                     gt_scope=config.reward_gt_scope)
        except (KeyError, TypeError, json.JSONDecodeError) as err:
            raise VrtEvalError(f"{args.requests}:{lineno}: bad request ({err})") from err
        record = {"id": req.get("id"), **breakdown.to_record()}
        lines.append(json.dumps(record, sort_keys=True))
    _write_out("\n".join(lines) + ("\n" if lines else ""), args.out)
    return 0


def _cmd_report(args) -> int:
    try:
        obj = json.loads(Path(args.infile).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise VrtEvalError(f"cannot read report {args.infile}: {err}") from err
    report = MetricsReport.from_json_obj(obj)
    _write_out(emit_report(report, args.output_format or "table"), args.out)
    return 0


def _boxify(rle_obj: dict) -> dict:
    mask = decode_rle(RleCounts.from_json(rle_obj))
    if mask.is_empty():
        return encode_rle(mask).to_json()
    box = tight_box(mask)
    return encode_rle(BinaryMask.from_box(box, mask.height, mask.width)).to_json()


def _cmd_convert_box(args) -> int:
    out_lines = []
    for lineno, line in enumerate(
        Path(args.infile).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if "declared_counts" in obj and "id" not in obj:
                out_lines.append(json.dumps(obj, sort_keys=True))
                continue
            if args.kind == "manifest":
                for t in obj["trace"]:
                    t["mask"] = _boxify(t["mask"])
                for a in obj["answer"]["objects"]:
                    a["mask"] = _boxify(a["mask"])
            else:
                obj["masks"] = [_boxify(m) for m in obj["masks"]]
        except (KeyError, TypeError, json.JSONDecodeError) as err:
            raise VrtEvalError(f"{args.infile}:{lineno}: bad record ({err})") from err
        out_lines.append(json.dumps(obj, sort_keys=True))
    _write_out("\n".join(out_lines) + ("\n" if out_lines else ""), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vrt-eval",
                     description="Score grounded reasoning traces and compute rewards.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[], help="score predictions against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--skip-missing", dest="skip_missing", action="store_true",
                   default=None, help="skip samples without predictions")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("validate", help="load a manifest and cross-check counts")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("reward", help="compute reward breakdowns for request records")
    p.add_argument("--requests", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default=None)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_reward)

    p = sub.add_parser("report", help="re-render a saved JSON report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", dest="output_format", choices=FORMATS, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("convert-box",
                       help="replace masks with their filled tight boxes")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--kind", choices=("manifest", "predictions"), required=True)
    p.set_defaults(func=_cmd_convert_box)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VrtEvalError as err:
        print(f"vrt-eval: error: {err}", file=sys.stderr)
        return DATA_EXIT
    except OSError as err:
        print(f"vrt-eval: error: {err}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
