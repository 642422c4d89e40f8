"""Command-line entry points: train, score, segment, eval, gen, serve.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error. Diagnostics
go to stderr; structured results go to the requested output files.
"""

import argparse
import json
import os
import sys

from . import detector as det
from .config import resolve_config
from .dataset import load_image, save_image
from .evaluation import format_ablation_table, run_benchmark
from .exceptions import DataError, ParameterError, PartwiseError, TrainingError
from .model import load_model, save_model
from .policy import PolicyConfig, load_policy
from .segmentation import render_overlay


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _common_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["pipeline.seed"] = args.seed
    if getattr(args, "features", None):
        overrides["features.extractor"] = args.features
    if getattr(args, "features_dir", None):
        overrides["features.dir"] = args.features_dir
    if getattr(args, "no_crf", False):
        overrides["segmentation.crf.enabled"] = False
    if getattr(args, "k", None) is not None:
        overrides["segmentation.k"] = args.k
    if getattr(args, "input_size", None) is not None:
        overrides["pipeline.input_size"] = args.input_size
    return overrides


def _load_policy_arg(args) -> PolicyConfig:
    if getattr(args, "policy", None):
        return load_policy(args.policy)
    return PolicyConfig()


def cmd_train(args) -> int:
    cfg = resolve_config(args.config, _common_overrides(args))
    model = det.train(args.data, cfg)
    save_model(model, args.out)
    print(
        f"trained on {model.n_train} images; kept components {model.kept_ids} "
        f"(noise {model.noise_ids}, background {model.background_ids}); wrote {args.out}"
    )
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    policy = _load_policy_arg(args)
    lines = []
    for path in args.images:
        img = load_image(path)
        report = det.score_image(img, model, policy=policy, image_id=os.path.basename(path))
        lines.append(json.dumps(report.to_record(), sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_segment(args) -> int:
    model = load_model(args.model)
    img = load_image(args.image)
    seg, masks, resized = det.segment_only(img, model, os.path.basename(args.image))
    overlay = render_overlay(resized, seg, model.kept_ids)
    save_image(overlay, args.out)
    if args.masks_dir:
        os.makedirs(args.masks_dir, exist_ok=True)
        import numpy as np

        for k, mask in masks.items():
            out = np.repeat(np.asarray(mask, dtype=np.uint8)[:, :, None] * 255, 3, axis=2)
            save_image(out, os.path.join(args.masks_dir, f"component_{k}.png"))
    print(f"wrote overlay {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    policy = _load_policy_arg(args)
    if args.ablate:
        from .dataset import test_images, training_images
        from .evaluation import run_ablations
        from .synthetic import ProductSample

        paths = training_images(args.data)
        train_imgs = [load_image(p) for p in paths]
        train_ids = [os.path.relpath(p, args.data).replace(os.sep, "/") for p in paths]
        samples = [
            ProductSample(index=i, kind=kind, label=label, image=load_image(p), masks={}, counts={})
            for i, (p, label, kind) in enumerate(test_images(args.data))
        ]
        rows = run_ablations(train_imgs, train_ids, samples, model.config)
        table = format_ablation_table(rows)
    else:
        result = run_benchmark(model, policy, args.data)
        table = result.format_table()
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(result.to_jsonl())
    if args.table:
        with open(args.table, "w", encoding="utf-8") as fh:
            fh.write(table)
    sys.stdout.write(table)
    return 0


def cmd_gen(args) -> int:
    if args.kind == "circles":
        from .synthetic import gen_circle_dataset

        out = args.out
        counts = range(args.min_count, args.max_count + 1)
        meta = []
        for sample in gen_circle_dataset(seed=args.seed, counts=counts, per_count=args.per_count):
            sub = os.path.join(out, f"count_{sample.count:02d}")
            os.makedirs(sub, exist_ok=True)
            save_image(sample.image, os.path.join(sub, f"{sample.index:04d}.png"))
            meta.append({"count": sample.count, "index": sample.index})
        with open(os.path.join(out, "counts.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh)
        print(f"wrote circle dataset under {out}")
        return 0
    from .synthetic import default_product_spec, write_product_dataset

    spec = default_product_spec()
    defects = {k: args.per_defect for k in ("missing", "extra", "color_swap")}
    if args.all_defects:
        defects.update({"size_change": args.per_defect, "scratch": args.per_defect})
    write_product_dataset(
        spec, args.out, args.n_train, args.n_test_normal, defects, seed=args.seed
    )
    print(f"wrote product dataset under {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve_forever

    model = load_model(args.model)
    policy = _load_policy_arg(args)
    serve_forever(model, policy, host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="partwise", description="Component-aware anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (dotted or nested keys)")
        p.add_argument("--seed", type=int, help="pipeline seed")
        p.add_argument("--features", choices=["mock", "file"], help="feature extractor")
        p.add_argument("--features-dir", help="directory of .cfm feature files")
        p.add_argument("--no-crf", action="store_true", help="disable CRF refinement")
        p.add_argument("--k", type=int, help="number of KMeans components")
        p.add_argument("--input-size", type=int, help="pipeline input size")

    p = sub.add_parser("train", help="train a component model on normal images")
    add_common(p)
    p.add_argument("--data", required=True, help="dataset root (train/good/*.png)")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score images against a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--policy")
    p.add_argument("--out", help="report JSONL path (stdout if omitted)")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("segment", help="write a component overlay for one image")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="overlay PNG path")
    p.add_argument("--masks-dir", help="also write per-component masks here")
    p.add_argument("image")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="benchmark a model on an MVTec-style dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--policy")
    p.add_argument("--out", help="per-image report JSONL")
    p.add_argument("--table", help="human-readable AUROC table path")
    p.add_argument("--ablate", action="store_true", help="run the ablation grid instead")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate synthetic datasets")
    p.add_argument("kind", choices=["circles", "product"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-count", type=int, default=100)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--max-count", type=int, default=13)
    p.add_argument("--n-train", type=int, default=50)
    p.add_argument("--n-test-normal", type=int, default=40)
    p.add_argument("--per-defect", type=int, default=20)
    p.add_argument("--all-defects", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("serve", help="run the HTTP scoring/tuning service")
    p.add_argument("--model", required=True)
    p.add_argument("--policy")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8123)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"partwise: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, TrainingError, OSError) as exc:
        print(f"partwise: data error: {exc}", file=sys.stderr)
        return 2
    except PartwiseError as exc:
        print(f"partwise: error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"partwise: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
