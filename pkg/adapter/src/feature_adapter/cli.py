import argparse
import sys

from .backbones import BackboneError, available_backbones
from .dump import AdapterConfig, dump_features


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="partwise-adapter")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dump", help="write CFM1 feature files for an image tree")
    p.add_argument("--backbone", default="wide_resnet50_2", help=", ".join(available_backbones()))
    p.add_argument("--block", type=int, default=2, help="layer/block selector")
    p.add_argument("--in", dest="image_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--no-pretrained", action="store_true", help="seeded random weights (offline)")
    p.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    config = AdapterConfig(
        backbone=args.backbone,
        block=args.block,
        size=args.size,
        pretrained=not args.no_pretrained,
    )
    try:
        written = dump_features(args.image_dir, args.out_dir, config, verbose=not args.quiet)
    except (BackboneError, FileNotFoundError) as exc:
        print(f"partwise-adapter: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(written)} feature files under {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
