"""Command-line surface.

Subcommands: synth, stats, vocab, train, eval, standard, sweep, transfer,
gradcheck, report.  Progress goes to stderr, data to files; stdout carries
only final summary lines.  Exit codes: 0 success, 1 runtime failure
(stderr line prefixed ``error:``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import SyntheticConfig, generate_synthetic, load_corpus, save_corpus
from .gradcheck import run_grad_suite
from .harness import (
    ExperimentConfig,
    compute_metrics,
    corpus_hash,
    emit_results,
    run_size_sweep,
    run_standard,
    run_transfer,
)
from .harness.metrics import MetricsReport
from .models import MODEL_KINDS, build_estimator
from .nn import load_checkpoint, save_checkpoint
from .scaling import fit_and_apply_scaler
from .trees import compute_tree_stats
from .vocab import VOCAB_SOURCES, build_vocab


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="astreg",
        description="Execution-time regression on source-code trees.",
    )
    parser.add_argument("--version", action="version", version=f"astreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, corpus: bool = True):
        # defaults stay None so the config-file merge can tell explicit
        # flags apart; hard defaults live in _experiment_config
        if corpus:
            p.add_argument("--corpus", required=True, help="corpus directory or JSON-lines file")
        p.add_argument("--config", help="JSON file with defaults; explicit flags win")
        p.add_argument("--model", choices=MODEL_KINDS, default=None)
        p.add_argument("--preset", choices=("tiny", "small", "large"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--seeds", type=int, nargs="+", help="seed list for multi-seed protocols")
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--batch", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic corpus with a planted duration function")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--min-nodes", type=int, default=SyntheticConfig.min_nodes)
    p.add_argument("--max-nodes", type=int, default=SyntheticConfig.max_nodes)
    p.add_argument("--coeff-a", type=float, default=SyntheticConfig.a)
    p.add_argument("--coeff-b", type=float, default=SyntheticConfig.b)
    p.add_argument("--coeff-c", type=float, default=SyntheticConfig.c)
    p.add_argument("--sigma", type=float, default=SyntheticConfig.sigma)
    p.add_argument("--runs", type=int, default=SyntheticConfig.runs_per_record)

    p = sub.add_parser("stats", help="print per-tree averages: nodes, edges, diameter, density")
    p.add_argument("--corpus", required=True)

    p = sub.add_parser("vocab", help="build a vocabulary and print its size")
    p.add_argument("--corpus", required=True)
    p.add_argument("--source", choices=VOCAB_SOURCES, default="tokens")
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--out", help="write the vocabulary as JSON")

    p = sub.add_parser("train", help="train one model on the full corpus and checkpoint it")
    add_common(p)
    p.add_argument("--out", required=True, help="checkpoint directory")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    add_common(p)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("standard", help="run the multi-seed 80/20 protocol")
    add_common(p)
    p.add_argument("--train-frac", type=float, default=None)
    p.add_argument("--memorize", action="store_true", help="sanity mode: evaluate on the training set")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run the training-size sweep protocol")
    add_common(p)
    p.add_argument("--fractions", type=float, nargs="+", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("transfer", help="run the cross-corpus transferability protocol")
    p.add_argument("--source", required=True, help="training corpus path")
    p.add_argument("--target", required=True, help="fine-tuning/evaluation corpus path")
    p.add_argument("--config", help="JSON file with defaults; explicit flags win")
    p.add_argument("--model", choices=MODEL_KINDS, default=None)
    p.add_argument("--preset", choices=("tiny", "small", "large"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--portions", type=float, nargs="+", default=None)
    p.add_argument("--fine-tune-epochs", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--model", choices=MODEL_KINDS + ("all",), default="all")
    p.add_argument("--preset", choices=("tiny", "small", "large"), default="tiny")
    p.add_argument("--entries", type=int, default=16, help="checked entries per parameter tensor")
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("report", help="re-emit results.csv and scatter plots from saved reports")
    p.add_argument("--reports", required=True, help="reports JSON written by a protocol run")
    p.add_argument("--out", required=True)
    return parser


def _load_config_file(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    return json.loads(Path(args.config).read_text(encoding="utf-8"))


def _experiment_config(args) -> ExperimentConfig:
    """Merge precedence: explicit flag > config file > hard default."""
    file_cfg = _load_config_file(args)

    def pick(flag: str, cfg_key: str, default):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return file_cfg.get(cfg_key, default)

    seeds = args.seeds if args.seeds else file_cfg.get("seeds") or [pick("seed", "seed", 0)]
    return ExperimentConfig(
        model=pick("model", "model", "dual"),
        preset=pick("preset", "preset", "tiny"),
        epochs=pick("epochs", "epochs", 100),
        lr=pick("lr", "lr", 1e-4),
        batch_size=pick("batch", "batch_size", 4),
        seeds=tuple(seeds),
        train_frac=pick("train_frac", "train_frac", 0.8),
        sweep_fractions=tuple(pick("fractions", "sweep_fractions", (0.2, 0.4, 0.6))),
        transfer_portions=tuple(pick("portions", "transfer_portions", (0.1, 0.2, 0.3))),
        fine_tune_epochs=pick("fine_tune_epochs", "fine_tune_epochs", None),
        memorize=bool(getattr(args, "memorize", False) or file_cfg.get("memorize", False)),
        jobs=pick("jobs", "jobs", 1),
        model_overrides=file_cfg.get("model_overrides", {}),
    )


def _save_reports_json(reports: list[MetricsReport], path: Path) -> None:
    payload = [
        {
            "model": r.model, "dataset": r.dataset, "protocol": r.protocol,
            "fraction": r.fraction, "mse_mean": r.mse_mean, "mse_std": r.mse_std,
            "mae_mean": r.mae_mean, "mae_std": r.mae_std,
            "pearson_mean": r.pearson_mean, "pearson_std": r.pearson_std,
            "per_seed": r.per_seed, "pairs": r.pairs, "single_seed": r.single_seed,
        }
        for r in reports
    ]
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_reports_json(path: Path) -> list[MetricsReport]:
    payload = json.loads(path.read_text(encoding="utf-8"))
    return [
        MetricsReport(
            model=r["model"], dataset=r["dataset"], protocol=r["protocol"],
            fraction=r["fraction"], mse_mean=r["mse_mean"], mse_std=r["mse_std"],
            mae_mean=r["mae_mean"], mae_std=r["mae_std"],
            pearson_mean=r["pearson_mean"], pearson_std=r["pearson_std"],
            per_seed=r.get("per_seed", []),
            pairs=[tuple(p) for p in r.get("pairs", [])],
            single_seed=r.get("single_seed", False),
        )
        for r in payload
    ]


def _cmd_synth(args) -> int:
    cfg = SyntheticConfig(
        min_nodes=args.min_nodes, max_nodes=args.max_nodes,
        a=args.coeff_a, b=args.coeff_b, c=args.coeff_c,
        sigma=args.sigma, runs_per_record=args.runs,
    )
    records = generate_synthetic(args.n, args.seed, cfg)
    save_corpus(records, args.out, meta=cfg.planted_meta(args.seed))
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_stats(args) -> int:
    records = load_corpus(args.corpus)
    stats = [compute_tree_stats(r.tree) for r in records]
    avg = lambda xs: sum(xs) / len(xs)
    print(f"records      {len(records)}")
    print(f"avg |V|      {avg([s.num_nodes for s in stats]):.2f}")
    print(f"avg |E|      {avg([s.num_edges for s in stats]):.2f}")
    print(f"avg diameter {avg([s.diameter for s in stats]):.2f}")
    print(f"avg density  {avg([s.density for s in stats]):.4f}")
    return 0


def _cmd_vocab(args) -> int:
    records = load_corpus(args.corpus)
    vocab = build_vocab(records, source=args.source, min_freq=args.min_freq)
    if args.out:
        Path(args.out).write_text(json.dumps(vocab.entries, indent=2) + "\n", encoding="utf-8")
    print(f"vocab size {len(vocab)} (source={args.source}, min_freq={args.min_freq})")
    return 0


def _prepared_corpus(path: str):
    records = load_corpus(path)
    fit_and_apply_scaler(records, [records])
    return records


def _cmd_train(args) -> int:
    config = _experiment_config(args)
    records = _prepared_corpus(args.corpus)
    seed = config.seeds[0]
    _progress(f"training {config.model} ({config.preset}) on {len(records)} records, seed {seed}")
    estimator = build_estimator(
        config.model, preset=config.preset, epochs=config.epochs,
        lr=config.lr, batch_size=config.batch_size, seed=seed,
        **config.model_overrides,
    )
    estimator.fit(records)
    save_checkpoint(estimator.parameters_(), config.to_dict(), args.out)
    print(f"final train loss {estimator.loss_history_[-1]:.6f}" if estimator.loss_history_
          else "trained 0 epochs")
    return 0


def _cmd_eval(args) -> int:
    config = _experiment_config(args)
    records = _prepared_corpus(args.corpus)
    estimator = build_estimator(
        config.model, preset=config.preset, epochs=0,
        lr=config.lr, batch_size=config.batch_size, seed=config.seeds[0],
        **config.model_overrides,
    )
    estimator.fit(records)  # builds vocabularies/parameters; 0 epochs
    load_checkpoint(estimator.parameters_(), args.checkpoint)
    metrics = compute_metrics([r.target for r in records], estimator.predict(records))
    print(f"mse {metrics.mse:.6f} mae {metrics.mae:.6f} pearson {metrics.pearson:.4f}")
    return 0


def _emit(reports, records, config: ExperimentConfig, out: str) -> None:
    out_dir = Path(out)
    emit_results(reports, out_dir, config=config.to_dict(), corpus_digest=corpus_hash(records))
    _save_reports_json(reports, out_dir / "reports.json")


def _cmd_standard(args) -> int:
    config = _experiment_config(args)
    records = load_corpus(args.corpus)
    _progress(f"standard protocol: {config.model}, seeds {list(config.seeds)}")
    report = run_standard(records, config, dataset=Path(args.corpus).stem or "corpus")
    _emit([report], records, config, args.out)
    print(
        f"{config.model} standard: mse {report.mse_mean:.4f}±{report.mse_std:.4f} "
        f"mae {report.mae_mean:.4f}±{report.mae_std:.4f} "
        f"pearson {report.pearson_mean:.4f}±{report.pearson_std:.4f}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = _experiment_config(args)
    records = load_corpus(args.corpus)
    _progress(f"size sweep: {config.model}, fractions {list(config.sweep_fractions)}")
    reports = run_size_sweep(records, config, dataset=Path(args.corpus).stem or "corpus")
    _emit(reports, records, config, args.out)
    for r in reports:
        print(f"{config.model} sweep {r.fraction:.0%}: mse {r.mse_mean:.4f} pearson {r.pearson_mean:.4f}")
    return 0


def _cmd_transfer(args) -> int:
    config = _experiment_config(args)
    source = load_corpus(args.source)
    target = load_corpus(args.target)
    _progress(f"transfer: {config.model}, portions {list(config.transfer_portions)}")
    reports = run_transfer(
        source, target, config,
        source_name=Path(args.source).stem or "source",
        target_name=Path(args.target).stem or "target",
    )
    _emit(reports, source + target, config, args.out)
    for r in reports:
        print(f"{config.model} transfer {r.fraction:.0%}: mse {r.mse_mean:.4f} pearson {r.pearson_mean:.4f}")
    return 0


def _cmd_gradcheck(args) -> int:
    kinds = MODEL_KINDS if args.model == "all" else (args.model,)
    results = run_grad_suite(kinds, preset=args.preset, max_entries_per_param=args.entries)
    failed = False
    for kind, err in results.items():
        print(f"{kind} max relative error {err:.3e}")
        failed = failed or err > args.tol
    if failed:
        raise RuntimeError(f"gradient check exceeded tolerance {args.tol}")
    return 0


def _cmd_report(args) -> int:
    reports = _load_reports_json(Path(args.reports))
    emit_results(reports, args.out)
    print(f"re-emitted {len(reports)} report rows to {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "stats": _cmd_stats,
    "vocab": _cmd_vocab,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "standard": _cmd_standard,
    "sweep": _cmd_sweep,
    "transfer": _cmd_transfer,
    "gradcheck": _cmd_gradcheck,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
