"""`bcv-harness` command: train / predict / sweep."""

from __future__ import annotations

import argparse
import sys

from .config import HarnessConfig, HarnessError
from .evalbridge import evaluate_predictions, map_at
from .predict import predict_split
from .sweep import sweep_input_size
from .train import train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcv-harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dataset", required=True)
        p.add_argument("--input-size", type=int, default=416)
        p.add_argument("--seed", type=int, default=0)

    p_train = sub.add_parser("train")
    common(p_train)
    p_train.add_argument("--epochs", type=int, default=60)
    p_train.add_argument("--out", required=True)

    p_predict = sub.add_parser("predict")
    common(p_predict)
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--split", default="test.txt")
    p_predict.add_argument("--out", required=True)
    p_predict.add_argument("--eval", action="store_true", help="score via the bcv evaluator")

    p_sweep = sub.add_parser("sweep")
    common(p_sweep)
    p_sweep.add_argument("--epochs", type=int, default=40)
    p_sweep.add_argument("--sizes", required=True, help="comma-separated input sizes")
    p_sweep.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = HarnessConfig(
                dataset_dir=args.dataset, input_size=args.input_size,
                epochs=args.epochs, seed=args.seed,
            )
            model_path = train(config, args.out)
            print(f"model: {model_path}")
        elif args.command == "predict":
            config = HarnessConfig(
                dataset_dir=args.dataset, input_size=args.input_size, seed=args.seed
            )
            out = predict_split(args.model, args.dataset, args.split, config, args.out)
            print(f"predictions: {out}")
            if args.eval:
                report = evaluate_predictions(out, args.dataset)
                print(f"mAP@0.5 {map_at(report, 0.5) * 100:.2f}  "
                      f"mAP@0.75 {map_at(report, 0.75) * 100:.2f}")
        else:
            config = HarnessConfig(
                dataset_dir=args.dataset, input_size=args.input_size,
                epochs=args.epochs, seed=args.seed,
            )
            sizes = [int(v) for v in args.sizes.split(",") if v.strip()]
            rows = sweep_input_size(config, sizes, args.out)
            for size, m50, m75 in rows:
                print(f"{size}: mAP@0.5 {m50 * 100:.2f}  mAP@0.75 {m75 * 100:.2f}")
        return 0
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
