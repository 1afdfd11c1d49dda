"""Command-line front door.

Subcommands tie ingestion, ranking, online selection, evaluation, and
trace synthesis into reproducible runs with machine-readable outputs.
Every run takes a single --seed from which all sub-seeds derive, so a
repeated invocation with the same inputs produces byte-identical files.

Exit codes: 0 success, 2 usage or input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, osfs, ranking, synth, trace
from .errors import StablefsError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _load_preprocessed(path: str, target: str | None) -> trace.DesignMatrix:
    raw = trace.load_trace(path, target_column=target)
    matrix, _ = trace.preprocess(raw)
    return matrix


def cmd_rank(args: argparse.Namespace) -> int:
    if args.method == ranking.TB and args.target is None:
        print("stablefs rank: target column required for method tb", file=sys.stderr)
        return EXIT_USAGE
    matrix = _load_preprocessed(args.input, args.target)
    ranked = ranking.rank(matrix, args.method, seed=args.seed)
    if args.format == "json":
        rows = list(zip(ranked.order, ranked.scores))
        if args.k is not None:
            rows = rows[: args.k]
        payload = {
            "seed": args.seed,
            "method": ranked.method,
            "ranking": [
                {"rank": pos, "feature_index": f.index, "feature_name": f.name,
                 "score": score}
                for pos, (f, score) in enumerate(rows, start=1)
            ],
        }
        _emit_text(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        if args.out is None:
            print("stablefs rank: --out is required for csv output", file=sys.stderr)
            return EXIT_USAGE
        ranking.write_ranking_csv(ranked, args.out, top=args.k)
    return EXIT_OK


def cmd_osfs(args: argparse.Namespace) -> int:
    if args.method == ranking.TB and args.target is None:
        print("stablefs osfs: target column required for method tb", file=sys.stderr)
        return EXIT_USAGE
    matrix = _load_preprocessed(args.input, args.target)
    config = osfs.OsfsConfig(eta=args.eta, method=args.method, seed=args.seed)
    result = osfs.run_offline(matrix, config, start=args.start)
    payload = {"seed": args.seed, **result.to_dict()}
    _emit_text(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_study(args: argparse.Namespace) -> int:
    matrix = _load_preprocessed(args.input, args.target)
    report = evaluation.run_study(matrix, args.method, n_starts=args.n_starts,
                                  seed=args.seed, eta=args.eta)
    k_list = tuple(k for k in osfs.DEFAULT_K_GRID if k <= matrix.n)
    table = evaluation.similarity_evolution(matrix, args.method, k_list=k_list,
                                            n_starts=args.n_starts, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    json_path = stem.with_suffix(".json")
    csv_path = stem.with_suffix(".csv")
    sim_path = Path(f"{stem}_similarity.csv")
    json_path.write_text(report.to_json(indent=2) + "\n", encoding="utf-8")
    report.write_csv(csv_path)
    table.write_csv(sim_path)
    print(f"wrote {json_path}, {csv_path}, {sim_path}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    pattern: synth.PeriodicLoad | synth.FlashCrowdLoad
    if args.pattern == "periodic":
        pattern = synth.PeriodicLoad(period_s=args.period, amplitude=args.amplitude,
                                     base=args.base)
    else:
        pattern = synth.FlashCrowdLoad(event_rate=args.event_rate, base=args.base,
                                       peak=args.peak)
    spec = synth.SynthSpec(
        n_features=args.n_features, m_samples=args.m_samples,
        n_informative=args.n_informative, n_redundant=args.n_redundant,
        noise_sigma=args.noise_sigma, load_pattern=pattern, seed=args.seed)
    matrix = synth.generate(spec)
    trace.write_trace(matrix, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _emit_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_common(parser: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        parser.add_argument("--input", required=True, help="trace CSV path")
        parser.add_argument("--target", default=None, help="name of the target column")
    parser.add_argument("--seed", type=int, default=0, help="master seed (non-negative)")
    parser.add_argument("--out", default=None, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablefs",
        description="Streaming feature selection: rank features, find stable "
                    "feature sets online, and evaluate their prediction quality.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank all features of a trace")
    _add_common(p_rank)
    p_rank.add_argument("--method", choices=ranking.METHODS, default=ranking.ARR)
    p_rank.add_argument("--k", type=int, default=None, help="keep only the top k rows")
    p_rank.add_argument("--format", choices=("csv", "json"), default="csv")
    p_rank.set_defaults(func=cmd_rank)

    p_osfs = sub.add_parser("osfs", help="run the online stable-set search")
    _add_common(p_osfs)
    p_osfs.add_argument("--method", choices=ranking.METHODS, default=ranking.ARR)
    p_osfs.add_argument("--eta", type=float, default=0.5, help="stability threshold")
    p_osfs.add_argument("--start", type=int, default=1, help="1-based stream start row")
    p_osfs.set_defaults(func=cmd_osfs)

    p_study = sub.add_parser("study", help="multi-start selection + error study")
    _add_common(p_study)
    p_study.add_argument("--method", choices=ranking.METHODS, default=ranking.ARR)
    p_study.add_argument("--eta", type=float, default=0.5)
    p_study.add_argument("--n-starts", type=int, default=evaluation.DEFAULT_STARTS)
    p_study.set_defaults(func=cmd_study)

    p_synth = sub.add_parser("synth", help="generate a synthetic planted trace")
    _add_common(p_synth, needs_input=False)
    p_synth.add_argument("--n-features", type=int, default=100)
    p_synth.add_argument("--m-samples", type=int, default=2048)
    p_synth.add_argument("--n-informative", type=int, default=5)
    p_synth.add_argument("--n-redundant", type=int, default=10)
    p_synth.add_argument("--noise-sigma", type=float, default=0.05)
    p_synth.add_argument("--pattern", choices=("periodic", "flash_crowd"),
                         default="periodic")
    p_synth.add_argument("--period", type=float, default=600.0)
    p_synth.add_argument("--amplitude", type=float, default=0.8)
    p_synth.add_argument("--base", type=float, default=1.0)
    p_synth.add_argument("--event-rate", type=float, default=10.0)
    p_synth.add_argument("--peak", type=float, default=5.0)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) < 0:
        print("stablefs: --seed must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    if args.command in ("study", "synth") and args.out is None:
        print(f"stablefs {args.command}: --out is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (StablefsError, FileNotFoundError) as exc:
        print(f"stablefs {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"stablefs {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
