"""Command-line surface: evaluate, stats, correlate, sweep, annotate, dump-ops.

Logs and progress go to stderr; report tables go to stdout; report files are
written atomically. Exit codes: 0 success, 1 usage/config error, 2 data
error, 3 external-service failure. Reports embed the tool version and a
config echo (parallelism degree excluded, it never changes results).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import FORMATS, load_corpus
from .errors import ConfigError, DataError, ExternalServiceError, GcscEvalError
from .ioutil import write_text_atomic
from .judge import (
    JudgeConfig,
    Judgment,
    LlmClient,
    emit_annotation_templates,
    judge_word_ops,
    load_embedding_store,
    load_human_judgments,
    parse_annotation_templates,
    save_judgments,
)
from .metrics import (
    EVAL_CSC,
    EVAL_GCSC,
    MetricReport,
    compute_csc,
    compute_gcsc,
    jaccard,
    op_statistics,
    threshold_sweep,
)
from .phonics import load_pinyin_table
from .runner import (
    analyze_corpus,
    char_ops_by_sample,
    error_spans_by_sample,
    word_ops_by_sample,
)
from .segment import load_lexicon, load_segmentations
from .word_ops import dump_word_ops

logger = logging.getLogger("gcsc_eval")

API_KEY_ENV = "GCSC_LLM_API_KEY"


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _require_file(path: str | None, what: str) -> None:
    if path is not None and not Path(path).is_file():
        raise ConfigError(f"{what} file not found: {path}")


def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="corpus file (TSV or JSON-lines)")
    parser.add_argument("--format", choices=FORMATS, default="tsv", help="corpus file format")


def _add_segment_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lexicon", help="word list for the built-in segmenter")
    parser.add_argument(
        "--segmentations", help="JSON-lines file overriding the built-in segmenter per sample"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcsc-eval", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="run the full evaluation pipeline")
    _add_corpus_args(p_eval)
    _add_segment_args(p_eval)
    p_eval.add_argument("--metric", choices=("gcsc", "csc", "both"), default="both")
    p_eval.add_argument("--judge", choices=("exact", "embedding", "llm", "human"))
    p_eval.add_argument("--threshold", type=float, help="embedding judge threshold in [0,1]")
    p_eval.add_argument("--store", help="embedding store file (JSON-lines {text, vector})")
    p_eval.add_argument("--judgments", help="human judgment TSV for --judge human")
    p_eval.add_argument("--endpoint", help="chat-completion endpoint URL for --judge llm")
    p_eval.add_argument("--model", default="gpt-4", help="model name sent to the LLM judge")
    p_eval.add_argument("--cache-dir", help="LLM response cache directory")
    p_eval.add_argument("--max-attempts", type=int, default=3, help="LLM retry budget")
    p_eval.add_argument("--rps", type=float, help="LLM request rate limit per second")
    p_eval.add_argument("--out", default=".", help="output directory for report JSON files")
    p_eval.add_argument("--jobs", type=int, default=1, help="parallel analysis workers")
    p_eval.add_argument("--dump-ops", help="also write the word-op debug dump here")
    p_eval.add_argument("--dump-judgments", help="also write judgments as TSV here")

    p_stats = sub.add_parser("stats", help="operation-category statistics")
    _add_corpus_args(p_stats)
    p_stats.add_argument("--pinyin", required=True, help="pinyin table file")
    p_stats.add_argument("--judgments", help="optional judgment TSV for correct-share columns")
    p_stats.add_argument("--out", help="write the stats report JSON here")
    p_stats.add_argument("--jobs", type=int, default=1)

    p_corr = sub.add_parser("correlate", help="Jaccard agreement of two judgment files")
    p_corr.add_argument("--judgments-a", required=True)
    p_corr.add_argument("--judgments-b", required=True)

    p_sweep = sub.add_parser("sweep", help="threshold sweep against a reference judge")
    _add_corpus_args(p_sweep)
    _add_segment_args(p_sweep)
    p_sweep.add_argument("--store", required=True)
    p_sweep.add_argument(
        "--thresholds", required=True, help="comma-separated thresholds, e.g. 0.9,0.96"
    )
    p_sweep.add_argument("--reference", required=True, help="reference judgment TSV (e.g. human)")
    p_sweep.add_argument("--out", help="write the correlation report JSON here")
    p_sweep.add_argument("--csv", help="write plot-ready threshold,jaccard CSV here")
    p_sweep.add_argument("--jobs", type=int, default=1)

    p_ann = sub.add_parser("annotate", help="emit or ingest human annotation templates")
    p_ann.add_argument("mode", choices=("emit", "ingest"))
    _add_corpus_args(p_ann)
    _add_segment_args(p_ann)
    p_ann.add_argument("--template", help="filled template file (ingest)")
    p_ann.add_argument("--out", required=True, help="template file (emit) or judgment TSV (ingest)")
    p_ann.add_argument("--jobs", type=int, default=1)

    p_dump = sub.add_parser("dump-ops", help="write the word-op debug dump")
    _add_corpus_args(p_dump)
    _add_segment_args(p_dump)
    p_dump.add_argument("--out", required=True)
    p_dump.add_argument("--jobs", type=int, default=1)
    return parser


def _load_inputs(args):
    _require_file(args.corpus, "corpus")
    _require_file(getattr(args, "lexicon", None), "lexicon")
    _require_file(getattr(args, "segmentations", None), "segmentations")
    corpus = load_corpus(args.corpus, args.format)
    lexicon = load_lexicon(args.lexicon) if getattr(args, "lexicon", None) else None
    overrides = (
        load_segmentations(args.segmentations, corpus)
        if getattr(args, "segmentations", None)
        else None
    )
    return corpus, lexicon, overrides


def _config_echo(args, keys: tuple[str, ...]) -> dict:
    echo = {}
    for key in keys:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            echo[key] = value
    return echo


def _report_payload(report: MetricReport, echo: dict) -> dict:
    return {
        "metric": report.metric,
        "scores": report.scores(),
        "counts": report.counts(),
        "unjudged": report.ops_unjudged,
        "tool_version": __version__,
        "config": echo,
    }


def _write_json(path: str | Path, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def _print_report(report: MetricReport) -> None:
    print(f"metric: {report.metric}")
    print(f"{'level':<12}{'precision':>12}{'recall':>12}{'f1':>12}")
    print(
        f"{'sentence':<12}{report.sentence_precision:>12.2f}"
        f"{report.sentence_recall:>12.2f}{report.sentence_f1:>12.2f}"
    )
    print(
        f"{'character':<12}{report.char_precision:>12.2f}"
        f"{report.char_recall:>12.2f}{report.char_f1:>12.2f}"
    )
    counts = report.counts()
    print("counts: " + " ".join(f"{k}={v}" for k, v in counts.items()))
    print()


def _build_judge_config(args) -> JudgeConfig:
    if not args.judge:
        raise ConfigError("--judge is required when computing the word-level metric")
    if args.judge == "embedding":
        if args.threshold is None:
            raise ConfigError("--threshold is required for --judge embedding")
        if not args.store:
            raise ConfigError("--store is required for --judge embedding")
        _require_file(args.store, "embedding store")
        return JudgeConfig(
            backend="embedding",
            threshold=args.threshold,
            store=load_embedding_store(args.store),
        )
    if args.judge == "llm":
        if not args.endpoint:
            raise ConfigError("--endpoint is required for --judge llm")
        client = LlmClient(
            endpoint=args.endpoint,
            model=args.model,
            cache_dir=args.cache_dir,
            api_key=os.environ.get(API_KEY_ENV),
            max_attempts=args.max_attempts,
            requests_per_second=args.rps,
        )
        return JudgeConfig(backend="llm", llm=client)
    if args.judge == "human":
        if not args.judgments:
            raise ConfigError("--judgments is required for --judge human")
        _require_file(args.judgments, "judgments")
        return JudgeConfig(backend="human", judgments_path=args.judgments)
    return JudgeConfig(backend="exact")


def cmd_evaluate(args) -> int:
    want_gcsc = args.metric in ("gcsc", "both")
    want_csc = args.metric in ("csc", "both")
    judge_config = _build_judge_config(args) if want_gcsc else None

    corpus, lexicon, overrides = _load_inputs(args)
    analyses = analyze_corpus(corpus, lexicon, overrides, jobs=args.jobs)
    ops_map = word_ops_by_sample(analyses)
    out_dir = Path(args.out)
    echo = _config_echo(
        args,
        ("corpus", "format", "metric", "judge", "threshold", "store",
         "lexicon", "segmentations", "endpoint", "model"),
    )

    if args.dump_ops:
        write_text_atomic(args.dump_ops, dump_word_ops(ops_map))
        logger.info("word-op dump written to %s", args.dump_ops)

    if want_gcsc:
        judgments, unjudged = judge_word_ops(corpus, ops_map, judge_config)
        if unjudged:
            logger.warning("%d ops could not be judged", len(unjudged))
        report = compute_gcsc(corpus, ops_map, error_spans_by_sample(analyses), judgments)
        _write_json(out_dir / f"{EVAL_GCSC}.json", _report_payload(report, echo))
        _print_report(report)
        if args.dump_judgments:
            save_judgments(judgments, args.dump_judgments)
            logger.info("judgments written to %s", args.dump_judgments)

    if want_csc:
        report = compute_csc(corpus)
        _write_json(out_dir / f"{EVAL_CSC}.json", _report_payload(report, echo))
        _print_report(report)

    logger.info("reports written to %s", out_dir)
    return 0


def cmd_stats(args) -> int:
    _require_file(args.pinyin, "pinyin table")
    _require_file(args.judgments, "judgments")
    table = load_pinyin_table(args.pinyin)
    corpus = load_corpus(args.corpus, args.format)
    analyses = analyze_corpus(corpus, jobs=args.jobs)
    judgments = None
    if args.judgments:
        verdicts = load_human_judgments(args.judgments)
        judgments = [
            Judgment(sid, idx, verdict, backend="human")
            for (sid, idx), verdict in verdicts.items()
        ]
    report = op_statistics(corpus, char_ops_by_sample(analyses), table, judgments)
    payload = {
        "stats": report.to_dict(),
        "tool_version": __version__,
        "config": _config_echo(args, ("corpus", "format", "pinyin", "judgments")),
    }
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps(payload["stats"], ensure_ascii=False, indent=2))
    return 0


def cmd_correlate(args) -> int:
    _require_file(args.judgments_a, "judgments-a")
    _require_file(args.judgments_b, "judgments-b")
    a = load_human_judgments(args.judgments_a)
    b = load_human_judgments(args.judgments_b)
    print(f"{jaccard(a, b):.6f}")
    return 0


def cmd_sweep(args) -> int:
    _require_file(args.store, "embedding store")
    _require_file(args.reference, "reference judgments")
    try:
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --thresholds value: {exc}") from exc
    corpus, lexicon, overrides = _load_inputs(args)
    analyses = analyze_corpus(corpus, lexicon, overrides, jobs=args.jobs)
    ops_map = word_ops_by_sample(analyses)
    universe = [(a.sample_id, op.op_index) for a in analyses for op in a.word_ops]
    reference = load_human_judgments(args.reference, expected=universe)
    store = load_embedding_store(args.store)
    report = threshold_sweep(corpus, ops_map, store, thresholds, reference)
    payload = {
        "correlation": report.to_dict(),
        "tool_version": __version__,
        "config": _config_echo(
            args, ("corpus", "format", "store", "thresholds", "reference",
                   "lexicon", "segmentations")
        ),
    }
    if args.out:
        _write_json(args.out, payload)
    if args.csv:
        rows = ["threshold,jaccard"] + [f"{t},{j}" for t, j in report.points]
        write_text_atomic(args.csv, "\n".join(rows) + "\n")
    for t, j in report.points:
        print(f"{t:.4f}\t{j:.6f}")
    print(f"peak_threshold\t{report.peak_threshold:.4f}")
    return 0


def cmd_annotate(args) -> int:
    corpus, lexicon, overrides = _load_inputs(args)
    analyses = analyze_corpus(corpus, lexicon, overrides, jobs=args.jobs)
    ops_map = word_ops_by_sample(analyses)
    if args.mode == "emit":
        blocks = emit_annotation_templates(corpus, ops_map, args.out)
        logger.info("%d annotation blocks written to %s", blocks, args.out)
        return 0
    if not args.template:
        raise ConfigError("--template is required for annotate ingest")
    _require_file(args.template, "template")
    verdicts = parse_annotation_templates(args.template, corpus, ops_map)
    lines = [f"{sid}\t{idx}\t{1 if v else 0}" for (sid, idx), v in sorted(verdicts.items())]
    write_text_atomic(args.out, "\n".join(lines) + ("\n" if lines else ""))
    logger.info("%d judgments written to %s", len(verdicts), args.out)
    return 0


def cmd_dump_ops(args) -> int:
    corpus, lexicon, overrides = _load_inputs(args)
    analyses = analyze_corpus(corpus, lexicon, overrides, jobs=args.jobs)
    write_text_atomic(args.out, dump_word_ops(word_ops_by_sample(analyses)))
    logger.info("word-op dump written to %s", args.out)
    return 0


_COMMANDS = {
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
    "correlate": cmd_correlate,
    "sweep": cmd_sweep,
    "annotate": cmd_annotate,
    "dump-ops": cmd_dump_ops,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 1
    except ExternalServiceError as exc:
        logger.error("external service error: %s", exc)
        return 3
    except GcscEvalError as exc:
        logger.error("data error: %s", exc)
        return 2
    except SystemExit as exc:  # argparse --help/--version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
