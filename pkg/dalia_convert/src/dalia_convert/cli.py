import argparse
import sys
from pathlib import Path

from dalia_convert.convert import ConversionError, convert, load_manifest, verify


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dalia-convert",
        description="Convert PPG-Dalia archives to .ppgd interchange files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert all subjects and write manifest.json")
    p.add_argument("src", help="directory containing S<id>/S<id>.pkl archives")
    p.add_argument("dst", help="output directory for S<id>.ppgd files")
    p.add_argument("--fs-ppg", type=float, default=64.0)
    p.add_argument("--fs-lab", type=float, default=4.0)

    p = sub.add_parser("verify", help="re-read converted files against the manifest")
    p.add_argument("dst", help="directory with converted files")
    p.add_argument("--manifest", default=None, help="default: <dst>/manifest.json")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        if args.command == "convert":
            manifest = convert(args.src, args.dst, fs_ppg=args.fs_ppg, fs_lab=args.fs_lab)
            print(f"converted {len(manifest.subjects)} subjects to {args.dst}")
            return 0
        manifest_path = Path(args.manifest) if args.manifest else Path(args.dst) / "manifest.json"
        if not manifest_path.exists():
            print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
            return 2
        ok, failures = verify(args.dst, load_manifest(manifest_path))
        for failure in failures:
            print(f"verify FAILED: {failure}", file=sys.stderr)
        if ok:
            print("verify OK")
        return 0 if ok else 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
