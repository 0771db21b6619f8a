"""``simulate --config <path> --out <dir> [--dump-fields N] [--seed S]``."""

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .runner import run


def build_parser():
    p = argparse.ArgumentParser(prog="simulate", description="Run an invariant-monitoring scenario.")
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dump-fields", type=int, default=None, metavar="N",
                   help="write E and B every N steps (field scenarios)")
    p.add_argument("--seed", type=int, default=None, help="random seed (transport_check)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.dump_fields is not None and args.dump_fields < 0:
        print("error: --dump-fields must be >= 0", file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return 2
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    summary = run(cfg, args.out, dump_every=args.dump_fields, seed=args.seed)
    for name in sorted(summary.passed):
        value = summary.drifts.get(name)
        status = "PASS" if summary.passed[name] else "FAIL"
        print(f"{status} {name} {value:.3e}")
    if summary.discrimination:
        d = summary.discrimination
        status = "PASS" if d["passed"] else "FAIL"
        print(f"{status} discrimination {d['max_broken_change']:.3e} vs "
              f"{d['factor']:g} x {d['max_conserved_change']:.3e}")
    if summary.aborted:
        print(f"ABORTED {summary.message} (last good t = {summary.last_good_t:g})")
    print(f"wall time {summary.wall_time:.2f} s")
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
