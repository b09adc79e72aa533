"""Command-line front end: ``fdridge {generate,run,sweep,bench,verify}``.

Exit codes: 0 success, 1 numeric failure (or a failed verify suite),
2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import SKETCHERS
from .datagen import (RANK_FRACTIONS, SyntheticSpec, gen_synthetic, load_dataset, save_dataset,
                      select_gamma, shingle_series, spec_dict)
from .experiment import (BENCH_COLUMNS, RECORD_COLUMNS, SweepConfig, run_bench, run_one, run_sweep,
                         write_records)
from .linalg import InvalidInput, NumericError, read_csv_matrix

log = logging.getLogger("fdridge")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        out.append(int(2 ** int(part[2:])) if part.startswith("2^") else int(part))
    return out


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def cmd_generate(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        print(f"error: output directory {out} does not exist", file=sys.stderr)
        return EXIT_USAGE
    if args.kind == "shingle":
        if not args.series:
            print("error: --kind shingle needs --series <csv>", file=sys.stderr)
            return EXIT_USAGE
        series = read_csv_matrix(args.series).ravel()
        data = shingle_series(series, args.d, args.n, seed=args.seed, n_test=args.n_test)
        meta = {"kind": "shingle", "series": str(args.series), "seed": args.seed,
                "spec": {"n": args.n, "d": args.d, "n_test": data.A_test.shape[0]}}
    else:
        spec = SyntheticSpec(n=args.n, d=args.d, rank_fraction=RANK_FRACTIONS[args.kind],
                             noise_var=args.noise_var, seed=args.seed, n_test=args.n_test)
        data = gen_synthetic(spec)
        meta = {"kind": args.kind, "seed": args.seed, "spec": spec_dict(spec)}
    if args.gamma is not None:
        meta["gamma"] = args.gamma
    elif data.A_test.shape[0]:
        meta["gamma"] = select_gamma(data)
    meta["dataset_id"] = args.dataset_id or out.name
    manifest = save_dataset(data, out, meta)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return EXIT_OK


def _gamma(args, manifest) -> float:
    if args.gamma is not None:
        return float(args.gamma)
    if "gamma" not in manifest:
        raise InvalidInput("dataset has no stored gamma; pass --gamma")
    return float(manifest["gamma"])


def cmd_run(args) -> int:
    data, manifest = load_dataset(args.dataset)
    rec = run_one(data, args.solver, args.ell, _gamma(args, manifest), seed=args.seed,
                  dataset_id=manifest.get("dataset_id", Path(args.dataset).name))
    if args.out:
        write_records(args.out, [rec])
    else:
        _print_csv([rec], RECORD_COLUMNS)
    return EXIT_OK


def _print_csv(rows, columns):
    import csv
    from dataclasses import asdict

    w = csv.DictWriter(sys.stdout, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        row = asdict(r) if hasattr(r, "__dataclass_fields__") else r
        w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


def cmd_sweep(args) -> int:
    data, manifest = load_dataset(args.dataset)
    cfg = SweepConfig(solvers=args.solvers, ells=args.ell, gamma=_gamma(args, manifest),
                      trials=args.trials, base_seed=args.seed,
                      dataset_id=manifest.get("dataset_id", Path(args.dataset).name))
    records = run_sweep(data, cfg)
    write_records(args.out, records)
    failed = sum(1 for r in records if r.error and r.trial != "mean")
    print(f"wrote {len(records)} rows to {args.out} ({failed} failed cells)")
    return EXIT_OK


def cmd_bench(args) -> int:
    values = {"n": args.n, "d": args.d, "ell": args.ell}[args.vary]
    fixed = {k: v[0] for k, v in (("n", args.n), ("d", args.d), ("ell", args.ell))}
    rows = run_bench(args.solvers, args.vary, values, fixed["n"], fixed["d"], fixed["ell"],
                     gamma=args.gamma if args.gamma is not None else 1.0,
                     repeats=args.repeats, seed=args.seed)
    if args.out:
        write_records(args.out, rows, BENCH_COLUMNS)
    else:
        _print_csv(rows, BENCH_COLUMNS)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = verify.run_all(quick=args.quick)
    if args.timing:
        results.append(verify.check_timing_shape())
    if args.full_scale:
        res, _ = verify.check_large_sweep()
        results.append(res)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdridge", description="Streaming FD sketches for ridge regression")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic or shingled dataset directory")
    g.add_argument("out", help="existing output directory")
    g.add_argument("--kind", choices=["lr", "hr", "shingle"], default="hr")
    g.add_argument("--d", type=int, default=2 ** 11)
    g.add_argument("--n", type=int, default=2 ** 13)
    g.add_argument("--n-test", type=int, default=None, help="test rows (default d)")
    g.add_argument("--noise-var", type=float, default=4.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gamma", type=float, default=None, help="store this gamma instead of grid-selecting one")
    g.add_argument("--series", help="one-column CSV time series (for --kind shingle)")
    g.add_argument("--dataset-id", default=None)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="train and query one solver")
    r.add_argument("dataset")
    r.add_argument("--solver", choices=SKETCHERS, required=True)
    r.add_argument("--ell", type=int, default=64)
    r.add_argument("--gamma", type=float, default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None, help="CSV path (default stdout)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="solver x ell x trial sweep to CSV")
    s.add_argument("dataset")
    s.add_argument("--solvers", type=_str_list, default=list(SKETCHERS))
    s.add_argument("--ell", type=_int_list, default=[2 ** p for p in range(4, 10)],
                   help="comma list; 2^k shorthand allowed")
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bench", help="timing as n, d or ell varies")
    b.add_argument("--vary", choices=["n", "d", "ell"], required=True)
    b.add_argument("--n", type=_int_list, default=[2 ** 8])
    b.add_argument("--d", type=_int_list, default=[2 ** 11])
    b.add_argument("--ell", type=_int_list, default=[2 ** 6])
    b.add_argument("--solvers", type=_str_list, default=list(SKETCHERS))
    b.add_argument("--gamma", type=float, default=None)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run the bound and accuracy suites")
    v.add_argument("--quick", action="store_true", help="smaller corpora")
    v.add_argument("--timing", action="store_true", help="include the timing-shape check")
    v.add_argument("--full-scale", action="store_true", help="include the d=2^11 sweep (slow)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for key in ("solvers",):
        bad = [x for x in getattr(args, key, []) or [] if x not in SKETCHERS]
        if bad:
            parser.error(f"unknown solver(s) {bad}; choose from {', '.join(SKETCHERS)}")
    try:
        return args.func(args)
    except (InvalidInput, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
