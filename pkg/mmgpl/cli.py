#!/usr/bin/env python3
"""
MMGPL command line.

Usage:
    mmgpl gen-data --spec synth.json --out data/synth
    mmgpl fetch-concepts --classes CN,MCI,AD --k 4 --out bank.json --endpoint https://...
    mmgpl train --config config/run_config.json --data data/synth/manifest.json \\
        --bank data/synth/concepts.json --out runs/bwg.mmgc
    mmgpl train --config config/run_config.json --print-config
    mmgpl eval --ckpt runs/bwg.mmgc --data data/synth/manifest.json --predictions preds.csv
    mmgpl ablate --config config/run_config.json --data ... --bank ... --out results/
    mmgpl ablate --by modality ...
    mmgpl export-heatmap --ckpt runs/bwg.mmgc --subject s0003 --out exports/
    mmgpl export-graph --ckpt runs/bwg.mmgc --subject s0003 --out exports/
    mmgpl export-concept-flows --ckpt runs/bwg.mmgc --data ... --out exports/flows.csv

Every command accepts --seed, --set key=value (repeatable), --verbose and
--quiet. Errors are printed to stderr as one JSON line and the process exits
with the error's code (2 config, 3 data, 4 network, 5 numeric).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import httpx
import yaml
from pydantic import ValidationError

from shared.config import ARMS, EXIT_OK, LOG_FORMAT
from shared.errors import ConfigError, DataError, MMGPLError

from .concepts import EndpointConfig, embed_bank, fetch_concepts, load_bank, save_bank
from .config import RunConfig, dump_run_config, load_run_config, parse_override
from .dataset import Dataset, load_dataset
from .exporters import (
    FlowExporter, GraphExporter, HeatmapExporter, MetricsExporter, concept_flows, report_row,
)
from .model import MMGPLModel, load_model, read_sidecar, save_model
from .synthgen import SynthSpec, generate
from .trainer import evaluate, predict, run_ablation, run_modality_ablation, train_model
from .voltok import TokenLayout

logger = logging.getLogger(__name__)


# =============================================================================
# Argument parsing
# =============================================================================

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="Master seed (default: $MMGPL_SEED, then the config file)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key, e.g. --set graph.tau=0.2")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mmgpl", description="Multimodal graph prompt learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="Generate a planted-signal dataset")
    p.add_argument("--spec", type=str, default=None, help="SynthSpec JSON/YAML (default: built-in)")
    p.add_argument("--out", type=str, required=True, help="Output directory")
    p.add_argument("--workers", type=int, default=1, help="Parallel subject writers")

    p = sub.add_parser("fetch-concepts", parents=[common], help="Fetch a concept bank remotely")
    p.add_argument("--classes", type=str, required=True, help="Comma-separated class names")
    p.add_argument("--k", type=int, required=True, help="Concepts per class")
    p.add_argument("--out", type=str, required=True, help="Bank JSON to write")
    p.add_argument("--config", "-c", type=str, default=None)
    p.add_argument("--endpoint", type=str, default=None, help="Overrides concept_endpoint")
    p.add_argument("--token", type=str, default=None, help="Overrides concept_token")

    p = sub.add_parser("train", parents=[common], help="Train one model")
    p.add_argument("--config", "-c", type=str, default=None)
    p.add_argument("--data", type=str, default=None, help="Dataset manifest")
    p.add_argument("--bank", type=str, default=None, help="Concept bank JSON")
    p.add_argument("--out", type=str, default=None, help="Checkpoint path")
    p.add_argument("--log", type=str, default=None, help="JSON-lines run log (default: <out>.log.jsonl)")
    p.add_argument("--print-config", action="store_true", help="Echo the resolved config and exit")

    p = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint")
    p.add_argument("--ckpt", type=str, required=True)
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--bank", type=str, default=None)
    p.add_argument("--predictions", type=str, default=None, help="Per-subject predictions CSV")

    p = sub.add_parser("ablate", parents=[common], help="Cross-validated ablation")
    p.add_argument("--config", "-c", type=str, default=None)
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--bank", type=str, default=None)
    p.add_argument("--out", type=str, required=True, help="Results directory")
    p.add_argument("--by", choices=["arm", "modality"], default="arm")
    p.add_argument("--arms", type=str, default=",".join(ARMS), help="Comma-separated arms")

    for name, helptext in (("export-heatmap", "Token-weight heat maps of one subject"),
                           ("export-graph", "Token graph and similarity matrix of one subject")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--ckpt", type=str, required=True)
        p.add_argument("--subject", type=str, required=True)
        p.add_argument("--out", type=str, required=True, help="Output directory")
        p.add_argument("--data", type=str, default=None)
        p.add_argument("--bank", type=str, default=None)
        if name == "export-graph":
            p.add_argument("--threshold", type=float, default=None,
                           help="Minimum a_ij (default: export.edge_threshold)")

    p = sub.add_parser("export-concept-flows", parents=[common], help="Concept activation counts")
    p.add_argument("--ckpt", type=str, required=True)
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--bank", type=str, default=None)
    p.add_argument("--out", type=str, required=True, help="Flows CSV")
    return parser


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _show_progress(args: argparse.Namespace) -> bool:
    return not args.quiet and sys.stderr.isatty()


# =============================================================================
# Shared helpers
# =============================================================================

def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Precedence: flags > file > $MMGPL_SEED > defaults."""
    overrides: Dict[str, object] = dict(parse_override(item) for item in args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    for flag, key in (("data", "data.manifest"), ("bank", "data.bank")):
        value = getattr(args, flag, None)
        if value:
            overrides[key] = value
    return load_run_config(getattr(args, "config", None), overrides)


def _require(value: Optional[str], what: str, key: str) -> str:
    if not value:
        raise ConfigError(f"no {what} given; pass the flag or set {key}", key=key)
    return value


def _checkpoint_inputs(args: argparse.Namespace):
    """Model from a checkpoint plus the dataset it should read."""
    model = load_model(args.ckpt, bank_path=args.bank)
    meta = read_sidecar(args.ckpt)
    manifest = args.data or meta.get("data") or model.config.data_manifest
    manifest = _require(manifest, "dataset manifest", "data.manifest")
    dataset = load_dataset(manifest, modalities=model.layout.modality_ids)
    return model, dataset


# =============================================================================
# Commands
# =============================================================================

def cmd_gen_data(args: argparse.Namespace, **_) -> int:
    data = {}
    if args.spec:
        try:
            with open(args.spec, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise ConfigError(f"spec file not found: {args.spec}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"spec file is not valid YAML or JSON: {args.spec}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"spec file must hold a mapping: {args.spec}")
    for item in args.overrides:
        key, value = parse_override(item)
        data[key] = value
    if args.seed is not None:
        data["seed"] = args.seed
    spec = SynthSpec.model_validate(data)
    manifest = generate(spec, args.out, workers=args.workers, show_progress=_show_progress(args))
    print(manifest)
    return EXIT_OK


def cmd_fetch_concepts(args: argparse.Namespace, transport: Optional[httpx.BaseTransport] = None,
                       **_) -> int:
    cfg = resolve_config(args)
    endpoint = EndpointConfig(url=args.endpoint or cfg.concept_endpoint or "",
                              token=args.token or cfg.concept_token)
    names = [n.strip() for n in args.classes.split(",") if n.strip()]
    bank = fetch_concepts(endpoint, names, args.k, transport=transport)
    print(save_bank(bank, args.out))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, **_) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        print(dump_run_config(cfg))
        return EXIT_OK
    manifest = _require(cfg.data_manifest, "dataset manifest", "data.manifest")
    bank_path = _require(cfg.data_bank, "concept bank", "data.bank")
    out = _require(args.out, "checkpoint path (--out)", "--out")

    dataset = load_dataset(manifest, modalities=cfg.data_modalities)
    bank = load_bank(bank_path)
    _check_bank(bank.n_classes, dataset)
    embeddings = embed_bank(bank, dim=cfg.text_dim, seed=cfg.text_hash_seed)
    layout = TokenLayout.from_volumes(dataset.subjects[0].volumes, cfg.patch())
    model = MMGPLModel(layout, embeddings, cfg)

    log_path = args.log or f"{out}.log.jsonl"
    history = train_model(model, dataset.subjects, cfg.train(), log_path=log_path,
                          show_progress=_show_progress(args))
    save_model(out, model, extra={"bank": str(Path(bank_path).resolve()),
                                  "data": str(Path(manifest).resolve())})
    if history:
        logger.info(f"Loss {history[0].train_loss:.6f} -> {history[-1].train_loss:.6f}")
    print(out)
    return EXIT_OK


def _check_bank(n_classes: int, dataset: Dataset) -> None:
    if n_classes != dataset.n_classes:
        raise DataError(f"bank has {n_classes} classes, dataset has {dataset.n_classes}",
                        details={"bank": n_classes, "dataset": dataset.n_classes})


def cmd_eval(args: argparse.Namespace, **_) -> int:
    model, dataset = _checkpoint_inputs(args)
    _check_bank(model.embeddings.n_classes, dataset)
    preds = predict(model, dataset.subjects)
    report = evaluate(preds.predictions, preds.score_matrix(), preds.labels, dataset.n_classes)
    if args.predictions:
        MetricsExporter().export_predictions(preds, dataset.class_names, output_path=args.predictions)
    sys.stdout.write(report_row(report))
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace, **_) -> int:
    cfg = resolve_config(args)
    manifest = _require(cfg.data_manifest, "dataset manifest", "data.manifest")
    bank_path = _require(cfg.data_bank, "concept bank", "data.bank")
    dataset = load_dataset(manifest)
    bank = load_bank(bank_path)
    _check_bank(bank.n_classes, dataset)
    embeddings = embed_bank(bank, dim=cfg.text_dim, seed=cfg.text_hash_seed)

    if args.by == "modality":
        result = run_modality_ablation(dataset, cfg, embeddings, show_progress=_show_progress(args))
        key = "modalities"
    else:
        arms = [a.strip() for a in args.arms.split(",") if a.strip()]
        unknown = [a for a in arms if a not in ARMS]
        if unknown:
            raise ConfigError(f"unknown arms {unknown}; known: {list(ARMS)}", key="--arms")
        result = run_ablation(dataset, cfg, embeddings, arms=arms, show_progress=_show_progress(args))
        key = "arm"

    exporter = MetricsExporter(args.out)
    exporter.export_runs(result.runs)
    exporter.export_per_arm(result.runs, by=key)
    print(exporter.export_summary(result.summary))
    return EXIT_OK


def cmd_export_heatmap(args: argparse.Namespace, **_) -> int:
    model, dataset = _checkpoint_inputs(args)
    subject = dataset.find(args.subject)
    result = model.forward(subject.volumes)
    paths = HeatmapExporter(args.out, model.strategy).export(subject.subject_id, result, subject.volumes)
    print(paths[0])
    return EXIT_OK


def cmd_export_graph(args: argparse.Namespace, **_) -> int:
    model, dataset = _checkpoint_inputs(args)
    subject = dataset.find(args.subject)
    result = model.forward(subject.volumes)
    threshold = args.threshold if args.threshold is not None else model.config.export_edge_threshold
    paths = GraphExporter(args.out, threshold).export(subject.subject_id, result,
                                                      model.embeddings.class_names)
    print(paths[0])
    return EXIT_OK


def cmd_export_concept_flows(args: argparse.Namespace, **_) -> int:
    model, dataset = _checkpoint_inputs(args)
    bank = load_bank(args.bank) if args.bank else None
    flows = concept_flows(model, dataset.subjects, bank=bank, show_progress=_show_progress(args))
    print(FlowExporter(args.out).export(flows))
    return EXIT_OK


COMMANDS: Dict[str, Callable[..., int]] = {
    "gen-data": cmd_gen_data,
    "fetch-concepts": cmd_fetch_concepts,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "export-heatmap": cmd_export_heatmap,
    "export-graph": cmd_export_graph,
    "export-concept-flows": cmd_export_concept_flows,
}


def main(argv: Optional[Sequence[str]] = None,
         transport: Optional[httpx.BaseTransport] = None) -> int:
    """
    Run one command.

    Args:
        argv: arguments without the program name (default: sys.argv[1:])
        transport: httpx transport for fetch-concepts (tests pass a MockTransport)

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    configure_logging(args)
    try:
        return COMMANDS[args.command](args, transport=transport)
    except ValidationError as exc:
        first = exc.errors()[0]
        err: MMGPLError = ConfigError(f"invalid value: {first['msg']}",
                                      key=".".join(str(p) for p in first["loc"]) or None)
    except MMGPLError as exc:
        err = exc
    except OSError as exc:
        err = DataError(f"cannot access {exc.filename or 'file'}: {exc.strerror or exc}",
                        details={"path": str(exc.filename)} if exc.filename else None)
    print(err.to_line(), file=sys.stderr)
    return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
