"""``smash2`` command line.

Exit codes: 0 success, 2 usage or parse error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io
from .genesess import InferParams, InputTooShortError, infer
from .measures import entropy_rate, kl_divergence_detail, log_likelihood_detail
from .metric import NORMS, default_base_set, distance_matrix, load_base_set
from .pfsa import InvalidPfsaError, load_pfsa, sample, save_pfsa
from .quantize import (
    DegenerateSignalError,
    LabeledDataset,
    SchemeParseError,
    SearchGrid,
    apply_scheme,
    class_separation,
    format_scheme,
    parse_scheme,
    scheme_search,
)

log = logging.getLogger("smash2")

EXIT_USAGE = 2
EXIT_DATA = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _out(path):
    return open(path, "w") if path and path != "-" else sys.stdout


def cmd_gen(args) -> int:
    m = load_pfsa(args.model)
    start = "stationary" if args.start == "stationary" else int(args.start)
    fh = _out(args.output)
    try:
        for i in range(args.count):
            fh.write(io.format_symbols(sample(m, args.length, args.seed + i, start)) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_measure(args) -> int:
    if args.measure == "entropy":
        print(f"{entropy_rate(load_pfsa(args.model)):.6f}")
    elif args.measure == "kldiv":
        a, b = load_pfsa(args.model_a), load_pfsa(args.model_b)
        if a.alphabet_size != b.alphabet_size:
            raise CliError(f"alphabet sizes differ: {a.alphabet_size} vs {b.alphabet_size}", EXIT_USAGE)
        res = kl_divergence_detail(a, b)
        if res.smoothing_events:
            log.warning("smoothed %d forbidden cells of %s", res.smoothing_events, args.model_b)
        print(f"{res.value:.6f}")
    else:
        m = load_pfsa(args.model)
        for i, x in enumerate(io.read_symbols(args.sequences)):
            if not x:
                raise CliError(f"sequence {i} is empty", EXIT_DATA)
            if max(x) >= m.alphabet_size:
                raise CliError(f"sequence {i} uses symbols outside the model alphabet", EXIT_USAGE)
            value, clamps = log_likelihood_detail(x, m)
            if clamps:
                log.warning("sequence %d: %d zero-probability steps were clamped", i, clamps)
            print(f"{value:.6f}")
    return 0


def cmd_infer(args) -> int:
    seqs = io.read_symbols(args.sequences)
    if not 0 <= args.line < len(seqs):
        raise CliError(f"{args.sequences} has no line {args.line}", EXIT_DATA)
    x = seqs[args.line]
    try:
        params = InferParams(args.epsilon, args.min_count, args.max_states, args.alpha)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    try:
        m, report = infer(x, params, args.alphabet_size)
    except InputTooShortError as exc:
        raise CliError(f"input too short for inference ({len(x)} symbols): {exc}", EXIT_DATA) from exc
    save_pfsa(m, args.output)
    text = json.dumps(report.to_dict(), indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if report.coarse_merge:
        log.warning("epsilon=%g merges coarsely; see report notes", args.epsilon)
    return 0


def _grid(args) -> SearchGrid:
    extra = tuple(parse_scheme(s) for s in args.include_scheme or [])
    return SearchGrid(
        detrend=tuple(args.detrend),
        normalize=tuple(bool(v) for v in args.normalize),
        alphabet_sizes=tuple(args.alphabet),
        perturb_step=args.perturb_step,
        perturb_count=args.perturb_count,
        extra_schemes=extra,
    )


def _bases(args):
    return load_base_set(args.bases) if args.bases else default_base_set()


def cmd_quantize(args) -> int:
    series = io.read_series_csv(args.csv)
    labels = io.read_labels(args.labels) if args.labels else None
    if not series:
        raise CliError("no series in input", EXIT_DATA)
    if args.search:
        if labels is None:
            raise CliError("--search needs --labels", EXIT_USAGE)
        try:
            data = LabeledDataset(series, labels)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from exc
        try:
            ranked, notes = scheme_search(data, _grid(args), _bases(args), args.coord_norm)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from exc
        for n in notes:
            log.warning("skipped %s", n)
        print("rank,scheme,s,d,r")
        for i, sc in enumerate(ranked):
            sep = sc.separation
            print(f"{i},{format_scheme(sc.scheme)},{sep.same:.6f},{sep.cross:.6f},{sep.ratio:.6f}")
        scheme = ranked[0].scheme
    else:
        scheme = parse_scheme(args.scheme)
    kept = []
    for i, x in enumerate(series):
        try:
            kept.append(apply_scheme(x, scheme))
        except DegenerateSignalError as exc:
            log.warning("row %d skipped: %s", i, exc)
    if not kept:
        raise CliError("every row was degenerate under the scheme", EXIT_DATA)
    if args.output:
        io.write_symbols(kept, args.output)
    elif not args.search:
        for s in kept:
            print(io.format_symbols(s))
    return 0


def cmd_dist(args) -> int:
    if args.csv:
        if not args.scheme:
            raise CliError("--csv needs --scheme", EXIT_USAGE)
        scheme = parse_scheme(args.scheme)
        try:
            seqs = [apply_scheme(x, scheme) for x in io.read_series_csv(args.csv)]
        except DegenerateSignalError as exc:
            raise CliError(str(exc), EXIT_DATA) from exc
    else:
        seqs = [s for path in args.sequences for s in io.read_symbols(path)]
    if not seqs:
        raise CliError("empty dataset", EXIT_DATA)
    if any(len(s) == 0 for s in seqs):
        raise CliError("dataset contains an empty sequence", EXIT_DATA)
    bases = _bases(args)
    try:
        D = distance_matrix(seqs, bases, args.coord_norm)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    if args.output:
        io.write_matrix_csv(D, args.output)
    else:
        for row in D:
            print(",".join(f"{v:.12g}" for v in row))
    if args.heatmap:
        io.write_pgm(D, args.heatmap)
    if args.labels:
        labels = io.read_labels(args.labels)
        if len(labels) != len(seqs):
            raise CliError(f"{len(labels)} labels for {len(seqs)} sequences", EXIT_USAGE)
        try:
            sep = class_separation(D, labels)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from exc
        # summary goes to stderr when the matrix itself is on stdout
        fh = sys.stderr if not args.output else sys.stdout
        print(f"s={sep.same:.6f} d={sep.cross:.6f} r={sep.ratio:.6f}", file=fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smash2", description="PFSA-based time series distances")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample sequences from a PFSA file")
    g.add_argument("model")
    g.add_argument("--length", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--start", default="stationary", help="'stationary' or a state index")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("measure", help="entropy rate, KL divergence, log-likelihood")
    msub = m.add_subparsers(dest="measure", required=True)
    e = msub.add_parser("entropy")
    e.add_argument("model")
    k = msub.add_parser("kldiv")
    k.add_argument("model_a")
    k.add_argument("model_b")
    ll = msub.add_parser("loglik")
    ll.add_argument("model")
    ll.add_argument("sequences")
    m.set_defaults(func=cmd_measure)

    i = sub.add_parser("infer", help="infer a PFSA with GenESeSS")
    i.add_argument("sequences")
    i.add_argument("--line", type=int, default=0, help="which line of the symbol file to use")
    i.add_argument("--epsilon", type=float, default=0.05)
    i.add_argument("--min-count", type=int, default=5)
    i.add_argument("--max-states", type=int, default=64)
    i.add_argument("--alpha", type=float, default=0.5, help="pseudo-count added to every transition count")
    i.add_argument("--alphabet-size", type=int)
    i.add_argument("-o", "--output", required=True)
    i.add_argument("--report")
    i.set_defaults(func=cmd_infer)

    q = sub.add_parser("quantize", help="symbolize CSV series with a scheme or a scheme search")
    q.add_argument("csv")
    mode = q.add_mutually_exclusive_group(required=True)
    mode.add_argument("--scheme")
    mode.add_argument("--search", action="store_true")
    q.add_argument("--labels")
    q.add_argument("--detrend", type=int, nargs="+", default=[0, 1])
    q.add_argument("--normalize", type=int, nargs="+", choices=[0, 1], default=[0, 1])
    q.add_argument("--alphabet", type=int, nargs="+", default=[2])
    q.add_argument("--perturb-step", type=float, default=0.0)
    q.add_argument("--perturb-count", type=int, default=0)
    q.add_argument("--include-scheme", action="append")
    q.add_argument("--bases", nargs="+")
    q.add_argument("--coord-norm", choices=NORMS, default="l1")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_quantize)

    d = sub.add_parser("dist", help="Smash2.0 distance matrix")
    d.add_argument("sequences", nargs="*")
    d.add_argument("--csv")
    d.add_argument("--scheme")
    d.add_argument("--bases", nargs="+")
    d.add_argument("--labels")
    d.add_argument("--coord-norm", choices=NORMS, default="l1")
    d.add_argument("-o", "--output")
    d.add_argument("--heatmap")
    d.set_defaults(func=cmd_dist)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"smash2: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidPfsaError, SchemeParseError, io.FormatError) as exc:
        print(f"smash2: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"smash2: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
