"""Command line entry point: ``cody train | transfer | report | embed``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from cody.config import ABLATIONS, TrainConfig, parse_kv_file
from cody.envs import REGISTRY

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("cody")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--env", dest="env_name")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", dest="total_env_steps", type=int)
    p.add_argument("--init-steps", dest="init_steps", type=int)
    p.add_argument("--ablation", choices=ABLATIONS)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--image-size", dest="image_size", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--action-repeat", dest="action_repeat", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--eval-interval", dest="eval_interval", type=int)
    p.add_argument("--eval-episodes", dest="eval_episodes", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any other config key")
    p.add_argument("--out", type=Path, default=Path("runs"), help="parent directory of run directories")
    p.add_argument("--run-dir", type=Path, help="exact run directory (overrides --out)")


_FLAG_KEYS = (
    "env_name", "seed", "total_env_steps", "init_steps", "ablation", "lam", "eta",
    "image_size", "batch_size", "action_repeat", "hidden_dim", "eval_interval", "eval_episodes",
)


def config_from_args(args: argparse.Namespace) -> TrainConfig:
    values: dict = parse_kv_file(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    env_name = values.get("env_name", TrainConfig.env_name)
    if env_name not in REGISTRY:
        raise UsageError(f"unknown env {env_name!r}; choose from {', '.join(sorted(REGISTRY))}")
    try:
        return TrainConfig.from_dict(values)
    except (KeyError, ValueError) as err:
        raise UsageError(str(err)) from err


def run_dir_for(args: argparse.Namespace, config: TrainConfig, tag: str = "") -> Path:
    if args.run_dir is not None:
        return args.run_dir
    stamp = time.strftime("%Y%m%d-%H%M%S")
    name = f"{stamp}_{config.env_name}_{tag or config.ablation}_s{config.seed}"
    return args.out / name


def cmd_train(args: argparse.Namespace) -> int:
    from cody.trainer import train_loop

    config = config_from_args(args)
    run_dir = run_dir_for(args, config)
    log.info("training %s -> %s", config.env_name, run_dir)
    train_loop(config, run_dir)
    print(run_dir)
    return EXIT_OK


def cmd_transfer(args: argparse.Namespace) -> int:
    from cody.evalbench.report import find_runs, plot_curves
    from cody.evalbench.transfer import transfer, transfer_config
    from cody.trainer import train_loop

    if not args.source_ckpt.exists():
        raise UsageError(f"source checkpoint {args.source_ckpt} does not exist")
    if args.target_env not in REGISTRY:
        raise UsageError(f"unknown env {args.target_env!r}")
    args.env_name = args.target_env
    config = config_from_args(args)
    try:
        transfer_config(args.source_ckpt, args.target_env, config)
    except ValueError as err:
        raise UsageError(str(err)) from err
    run_dir = run_dir_for(args, config, tag="transfer")
    transfer(args.source_ckpt, args.target_env, config, run_dir / "transfer")
    if args.with_scratch:
        train_loop(config.replace(env_name=args.target_env), run_dir / "scratch")
        plot_curves(find_runs([run_dir]), run_dir / "transfer_vs_scratch.png", title="frozen transfer vs scratch")
    print(run_dir)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from cody.evalbench.report import build_report

    try:
        result = build_report(args.runs, args.out, args.marks)
    except FileNotFoundError as err:
        print(f"report: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(Path(result["table"]).read_text(), end="")
    print(f"curves: {result['plot']} (band = ±1 standard error over seeds)")
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    import numpy as np
    from PIL import Image

    from cody.evalbench.embeddings import export_embeddings, grid_mosaic
    from cody.evalbench.grid import grid_assign, pca_project
    from cody.evalbench.probe import smoothness_probe

    if not args.ckpt.exists():
        raise UsageError(f"checkpoint {args.ckpt} does not exist")
    rng = np.random.default_rng(args.seed)
    dump = export_embeddings(args.ckpt, args.n, rng, env_name=args.env)
    dump.save(args.out, env_name=args.env or "", source=str(args.ckpt))
    n_grid = min(len(dump), args.rows * args.cols)
    cells = grid_assign(pca_project(dump.embeddings[:n_grid]), args.rows, args.cols)
    Image.fromarray(grid_mosaic(dump.thumbnails[:n_grid], cells, args.rows, args.cols)).save(args.out / "grid.png")
    probe = smoothness_probe(dump.embeddings, dump.states, rng)
    print(f"spearman={probe.score:.3f} null_p99={probe.null_p99:.3f} beats_null={probe.beats_null}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cody", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train an agent")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="train a SAC head over a frozen pretrained encoder")
    p.add_argument("--source-ckpt", type=Path, required=True)
    p.add_argument("--target-env", required=True)
    p.add_argument("--with-scratch", action="store_true", help="also train from scratch and plot both")
    _add_train_flags(p)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("report", help="aggregate runs into curves and a score table")
    p.add_argument("runs", nargs="+", type=Path)
    p.add_argument("--out", type=Path, default=Path("report"))
    p.add_argument("--marks", type=int, nargs="+", default=[100_000, 500_000])
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("embed", help="export embeddings, grid mosaic and smoothness probe")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--env", default=None)
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--rows", type=int, default=30)
    p.add_argument("--cols", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("embeddings"))
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(asctime)s %(message)s")
    try:
        return args.func(args)
    except UsageError as err:
        print(f"cody: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001
        log.exception("run failed")
        print(f"cody: runtime failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
