"""Command-line front end for raw little-endian volumes (headerless, x fastest).

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 I/O or archive corruption.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import codec
from .errors import BoundViolation, CorruptStream, LopcError, SpecMismatch
from .grid import GridShape
from .quantize import ErrorBound, midbin_reconstruct, resolve
from .topology import passed, report_to_csv, report_to_json, verify_fields

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULT_SWEEP = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_TYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--dims expects X,Y[,Z], got {text!r}") from None
    if len(dims) not in (2, 3) or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"--dims expects 2 or 3 positive extents, got {text!r}")
    return dims


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"error bound must be positive and finite, got {text!r}")
    return v


def read_raw(path, dtype: str, dims) -> np.ndarray:
    dt = _TYPES[dtype]
    shape = GridShape(dims)
    size = os.path.getsize(path)
    if size != dt.itemsize * shape.size:
        raise SpecMismatch(
            f"{path}: {size} bytes, but {dtype} with dims {','.join(map(str, dims))} "
            f"needs {dt.itemsize * shape.size}"
        )
    return np.fromfile(path, dtype=dt).astype(dt.newbyteorder("=")).reshape(shape.array_shape)


def write_raw(path, values: np.ndarray) -> None:
    values.astype(values.dtype.newbyteorder("<")).tofile(path)


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("LOPC_THREADS")
    return int(env) if env else None


def _archive_stats(values, archive, seconds) -> dict:
    bin_frac, sub_frac = codec.stream_split_stats(archive)
    return {
        "compression_ratio": codec.compression_ratio(values, archive),
        "archive_bytes": len(archive),
        "bin_bytes": len(archive.bin_stream),
        "subbin_bytes": len(archive.subbin_stream),
        "bin_fraction": bin_frac,
        "subbin_fraction": sub_frac,
        "fixpoint_iterations": archive.stats.iterations,
        "fixpoint_raises": archive.stats.raises,
        "eps_abs": archive.header.eps_abs,
        "seconds": seconds,
    }


def cmd_compress(args) -> int:
    values = read_raw(args.input, args.type, args.dims)
    eb = ErrorBound(args.eb_mode, args.eb)
    if args.degrade == "mid-bin":
        eps = resolve(eb, values).eps_abs
        write_raw(args.out, midbin_reconstruct(values, eps))
        print(json.dumps({"degrade": "mid-bin", "eps_abs": eps}))
        return EXIT_OK
    t0 = time.perf_counter()
    archive = codec.compress(values, eb, threads=_threads(args))
    blob = archive.to_bytes()
    seconds = time.perf_counter() - t0
    Path(args.out).write_bytes(blob)
    print(json.dumps(_archive_stats(values, archive, seconds)))
    return EXIT_OK


def cmd_decompress(args) -> int:
    blob = Path(args.input).read_bytes()
    values = codec.decompress(blob, threads=_threads(args))
    write_raw(args.out, values)
    return EXIT_OK


def cmd_verify(args) -> int:
    original = read_raw(args.original, args.type, args.dims)
    reconstructed = read_raw(args.reconstructed, args.type, args.dims)
    eps = args.eb_abs
    if eps is None and args.eb is not None:
        eps = resolve(ErrorBound(args.eb_mode, args.eb), original).eps_abs
    report = verify_fields(original, reconstructed, eps)
    text = report_to_csv(report) if args.format == "csv" else report_to_json(report)
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    print(text.rstrip("\n"))
    return EXIT_OK if passed(report) else EXIT_VERIFY


def sweep_rows(values: np.ndarray, mode: str, bounds, threads=None) -> list[dict]:
    rows = []
    for eb in bounds:
        t0 = time.perf_counter()
        archive = codec.compress(values, ErrorBound(mode, eb), threads=threads)
        seconds = time.perf_counter() - t0
        bin_frac, sub_frac = codec.stream_split_stats(archive)
        rows.append(
            {
                "eb": eb,
                "ratio": codec.compression_ratio(values, archive),
                "bin_pct": 100.0 * bin_frac,
                "subbin_pct": 100.0 * sub_frac,
                "raises": archive.stats.raises,
                "iterations": archive.stats.iterations,
                "time": seconds,
            }
        )
    return rows


def cmd_sweep(args) -> int:
    values = read_raw(args.input, args.type, args.dims)
    rows = sweep_rows(values, args.eb_mode, args.ebs, _threads(args))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lopc",
        description="Error-bounded lossy compression preserving local order and critical points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def volume_flags(p):
        p.add_argument("--type", choices=sorted(_TYPES), required=True)
        p.add_argument("--dims", type=parse_dims, required=True, help="X,Y[,Z], x fastest")

    def thread_flag(p):
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: $LOPC_THREADS or 1)")

    p = sub.add_parser("compress", help="compress a raw volume")
    p.add_argument("input")
    volume_flags(p)
    p.add_argument("--eb-mode", choices=("abs", "noa"), default="noa")
    p.add_argument("--eb", type=positive_float, required=True)
    p.add_argument("--out", required=True)
    thread_flag(p)
    p.add_argument("--degrade", choices=("mid-bin",), default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore a raw volume from an archive")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    thread_flag(p)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="check bound, local order and critical points")
    p.add_argument("original")
    p.add_argument("reconstructed")
    volume_flags(p)
    p.add_argument("--eb-abs", type=positive_float, default=None)
    p.add_argument("--eb-mode", choices=("abs", "noa"), default="noa")
    p.add_argument("--eb", type=positive_float, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="compress at several bounds and emit CSV")
    p.add_argument("input")
    volume_flags(p)
    p.add_argument("--eb-mode", choices=("abs", "noa"), default="noa")
    p.add_argument(
        "--ebs",
        type=lambda s: [positive_float(t) for t in s.split(",")],
        default=list(DEFAULT_SWEEP),
        help="comma-separated bounds (default 1,1e-1,...,1e-6)",
    )
    p.add_argument("--out", default=None)
    thread_flag(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, CorruptStream, SpecMismatch) as exc:
        print(f"lopc: {exc}", file=sys.stderr)
        return EXIT_IO
    except BoundViolation as exc:
        print(f"lopc: internal error, {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (LopcError, ValueError) as exc:
        print(f"lopc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
