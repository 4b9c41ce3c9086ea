"""`egen-train`: train toy encoders on expression datasets, export embeddings.

Results are JSON on stdout, one-line summaries on stderr. Exit codes: 0 on
success, 1 on input/validation errors, 2 on unexpected runtime failures.
Hyperparameters come from flags, falling back to a YAML file (--config),
falling back to TrainConfig defaults.
"""

import argparse
import json
import sys
from dataclasses import asdict
from typing import Optional, Sequence

import yaml

from .config import TrainConfig
from .data import TrainerError
from .export import collect_expressions, export_embeddings
from .model import EncoderArtifact
from .train import train_contrastive, train_seq2seq


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{args.config}: expected a mapping of config keys")
        unknown = set(loaded) - set(TrainConfig.field_types())
        if unknown:
            raise ValueError(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(loaded)
    for name in TrainConfig.field_types():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    return TrainConfig(**values)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML file of TrainConfig fields (flags win)")
    types = TrainConfig.field_types()
    for name, typ in types.items():
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, type=typ, default=None)


def _maybe_export(artifact: EncoderArtifact, args: argparse.Namespace) -> Optional[dict]:
    if not args.export_to:
        return None
    if not args.exprs_from:
        raise ValueError("--export-to requires --exprs-from")
    exprs = collect_expressions(args.exprs_from)
    count = export_embeddings(artifact, exprs, args.export_to)
    return {"path": args.export_to, "vectors": count, "dim": artifact.dimension}


def cmd_seq2seq(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    result = train_seq2seq(args.pairs, cfg)
    out = {"config": asdict(cfg), "epoch_losses": result.epoch_losses}
    if args.save_model:
        result.artifact.save(args.save_model)
        out["model"] = args.save_model
    export = _maybe_export(result.artifact, args)
    if export:
        out["export"] = export
    _emit(out)
    _note(
        f"seq2seq: {cfg.epochs} epochs, loss {result.epoch_losses[0]:.4f} -> "
        f"{result.epoch_losses[-1]:.4f}"
    )
    return 0


def cmd_contrastive(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    result = train_contrastive(args.triplets, cfg)
    out = {"config": asdict(cfg), "epoch_losses": result.epoch_losses}
    if args.save_model:
        result.artifact.save(args.save_model)
        out["model"] = args.save_model
    export = _maybe_export(result.artifact, args)
    if export:
        out["export"] = export
    _emit(out)
    _note(
        f"contrastive: {cfg.epochs} epochs, loss {result.epoch_losses[0]:.4f} -> "
        f"{result.epoch_losses[-1]:.4f}"
    )
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    artifact = EncoderArtifact.load(args.model)
    exprs = collect_expressions(args.exprs_from)
    count = export_embeddings(artifact, exprs, args.out)
    _emit({"path": args.out, "vectors": count, "dim": artifact.dimension})
    _note(f"exported {count} vectors (dim {artifact.dimension}) to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="egen-train", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seq2seq", help="train source->target generation on pairs.tsv")
    p.add_argument("--pairs", required=True)
    p.add_argument("--save-model", dest="save_model")
    p.add_argument("--export-to", dest="export_to")
    p.add_argument("--exprs-from", dest="exprs_from", help="dataset or expression list to embed")
    _add_config_flags(p)
    p.set_defaults(func=cmd_seq2seq)

    p = sub.add_parser("contrastive", help="train the encoder on triplets.tsv")
    p.add_argument("--triplets", required=True)
    p.add_argument("--save-model", dest="save_model")
    p.add_argument("--export-to", dest="export_to")
    p.add_argument("--exprs-from", dest="exprs_from")
    _add_config_flags(p)
    p.set_defaults(func=cmd_contrastive)

    p = sub.add_parser("export", help="embed expressions with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--exprs-from", dest="exprs_from", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        TrainerError,
        FileNotFoundError,
        IsADirectoryError,
        PermissionError,
        ValueError,
        yaml.YAMLError,
    ) as exc:
        _note(f"error: {exc}")
        return 1
    except Exception as exc:  # noqa: BLE001 — runtime failures get exit code 2
        _note(f"runtime error: {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
