"""Command-line surface: prepare, synth, train, eval, ablate."""
from __future__ import annotations

import argparse
import os
import sys

from .ablation import ablation_tsv, run_ablation
from .config import load_run_config
from .data import (binarize, generate_synthetic, k_core_filter,
                   leave_one_out_split, load_split, parse_interactions,
                   remap_ids, save_split)
from .errors import ConfigError, DataError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the seed")


def _load_cfg(args):
    cfg = load_run_config(args.config, args.overrides)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _echo_resolved(cfg, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    dump = cfg.resolved_dump()
    with open(os.path.join(out_dir, "resolved_config.txt"), "w") as f:
        f.write(dump)
    sys.stdout.write(dump)


def cmd_prepare(args) -> int:
    cfg = _load_cfg(args)
    raw = []
    if args.format == "amazon_ratings":
        # one file per domain; domain index follows flag order
        for domain, path in enumerate(args.inputs):
            with open(path, encoding="utf-8") as f:
                raw.extend(parse_interactions(f, format="amazon_ratings",
                                              domain=domain))
    else:
        for path in args.inputs:
            with open(path, encoding="utf-8") as f:
                raw.extend(parse_interactions(f, format="native"))
    filtered = k_core_filter(binarize(raw, cfg.binarize_threshold), cfg.k_core)
    if not filtered:
        raise DataError("no records survive binarize + k-core filtering")
    dataset = remap_ids(filtered)
    split = leave_one_out_split(dataset)
    save_split(args.out, dataset, split)
    _echo_resolved(cfg, args.out)
    print(f"prepared: T={dataset.T} users={dataset.user_count} "
          f"items={dataset.item_count} train={len(split.train.records)} "
          f"test={len(split.test)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    dataset = generate_synthetic(cfg.gen_config(), cfg.seed)
    split = leave_one_out_split(dataset)
    save_split(args.out, dataset, split)
    _echo_resolved(cfg, args.out)
    print(f"synthesized: T={dataset.T} users={dataset.user_count} "
          f"items={dataset.item_count} train={len(split.train.records)} "
          f"test={len(split.test)}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .training import train

    cfg = _load_cfg(args)
    split = load_split(args.data)
    _echo_resolved(cfg, args.out)
    result = train(split, cfg.model_config(), cfg.train_config(),
                   out_dir=args.out, resume_from=args.resume)
    losses = [r["loss"] for r in result.log if "loss" in r]
    if losses:
        print(f"trained: steps logged={len(losses)} final_loss={losses[-1]:.4f}")
    print(f"checkpoint: {os.path.join(args.out, 'final.npz')}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .graph import build_graph, build_hyperedges_u
    from .metrics import evaluate
    from .model import Model, ModelConfig
    from .training import _restore_hyperedges, load_checkpoint

    cfg = _load_cfg(args)
    split = load_split(args.data)
    store, meta, extra = load_checkpoint(args.checkpoint)
    model_cfg = ModelConfig.from_dict(meta["model_config"])
    from .config import MODEL_KEYS
    if (cfg.explicit_keys & MODEL_KEYS
            and model_cfg.to_dict() != cfg.model_config().to_dict()):
        raise ConfigError("checkpoint model config does not match --config")
    graph = build_graph(split.train)
    build_hyperedges_u(graph)
    model = Model(model_cfg, graph, store)
    if model_cfg.uses_hyper_i():
        _restore_hyperedges(graph, extra)
        model.refresh_hyperedge_batches()
    table = evaluate(model, split, ks=cfg.eval_ks, seed=cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.tsv"), "w") as f:
        f.write(table.to_tsv())
    with open(os.path.join(args.out, "metrics.jsonl"), "w") as f:
        f.write(table.to_jsonl())
    sys.stdout.write(table.to_tsv())
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _load_cfg(args)
    cfg.validate()
    _echo_resolved(cfg, args.out)
    rows, _tables = run_ablation(cfg)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "ablation.tsv"), "w") as f:
        f.write(ablation_tsv(rows))
    sys.stdout.write(ablation_tsv(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperrec",
                                description="hypergraph multi-domain recommender")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare", help="parse, filter, split an interaction dataset")
    sp.add_argument("inputs", nargs="+", help="input files (amazon: one per domain)")
    sp.add_argument("--format", choices=["native", "amazon_ratings"], default="native")
    _add_common(sp)
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train a model on a prepared dataset")
    sp.add_argument("--data", required=True, help="prepared dataset directory")
    sp.add_argument("--resume", default=None, help="checkpoint to resume from")
    _add_common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint")
    sp.add_argument("--data", required=True, help="prepared dataset directory")
    sp.add_argument("--checkpoint", required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("ablate", help="train/evaluate the variant ladder")
    _add_common(sp)
    sp.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as e:
        print(f"numeric abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
