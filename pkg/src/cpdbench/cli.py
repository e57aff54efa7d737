"""Command-line entry point.

Subcommands compose through files only: ``run`` writes detection records
as JSON lines, ``evaluate`` turns records into score matrices, and
``analyze`` turns one matrix into a statistical report and a
critical-difference diagram. ``synth`` emits generated series,
``simulate-agreement`` estimates annotator-agreement p-values, and
``serve`` starts the annotation service.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path

from . import analysis, annosim, experiments, synthgen
from .data import load_annotations, load_dataset, validate_annotations
from .metrics import MetricConfig


def _load_dataset_dir(path: str) -> list:
    directory = Path(path)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory {path!r} not found")
    files = sorted(
        p for p in directory.glob("*.json") if not p.name.endswith(".truth.json")
    )
    if not files:
        raise FileNotFoundError(f"no dataset files in {path!r}")
    return [load_dataset(p) for p in files]


def cmd_run(args: argparse.Namespace) -> int:
    dataset = _load_dataset_dir(args.dataset_dir)
    annotations = None
    if args.annotations:
        annotations = load_annotations(args.annotations, args.annotation_base)
        validate_annotations(annotations, {s.name: s.n_obs for s in dataset})
    detectors = args.detectors.split(",") if args.detectors else None
    plan = experiments.build_plan(
        args.mode,
        detectors,
        timeout=args.timeout,
        seed=args.seed if args.seed is not None else 0,
        metric_cfg=MetricConfig(margin=args.margin),
    )
    records = experiments.run_experiment(plan, dataset, annotations, jobs=args.jobs)
    experiments.write_records(records, args.out)
    counts: dict[str, int] = {}
    for record in records:
        counts[record.status] = counts.get(record.status, 0) + 1
    print(f"wrote {len(records)} records to {args.out} ({counts})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = experiments.read_records(args.records)
    annotations = load_annotations(args.annotations, args.annotation_base)
    dataset = _load_dataset_dir(args.dataset_dir)
    lengths = {s.name: s.n_obs for s in dataset}
    classes = {s.name: experiments.series_class(s) for s in dataset}
    metrics = args.metrics.split(",")
    matrices = experiments.score_records(
        records, annotations, lengths, MetricConfig(margin=args.margin), metrics
    )
    out = Path(args.out)
    for metric, matrix in matrices.items():
        csv_path = out.with_name(f"{out.stem}_{metric}.csv")
        json_path = out.with_name(f"{out.stem}_{metric}.json")
        matrix.write_csv(csv_path)
        json_path.write_text(json.dumps(matrix.to_json(), indent=1), encoding="utf-8")
        print(f"wrote {csv_path} and {json_path}")
    # quality-control series stay out of the headline tables but are
    # reported in their own section
    sections = []
    any_matrix = next(iter(matrices.values()))
    for cls in ("univariate", "multivariate", "quality_control"):
        names = [s for s in any_matrix.series if classes.get(s) == cls]
        if names:
            subsets = {m: sm.subset(names) for m, sm in matrices.items()}
            sections.append(
                experiments.summary_markdown(subsets, title=f"Aggregate scores ({cls})")
            )
    md_path = out.with_name(f"{out.stem}_summary.md")
    md_path.write_text("\n".join(sections), encoding="utf-8")
    print(f"wrote {md_path}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    matrix = experiments.ScoreMatrix.read_csv(args.scores)
    rows = [
        s
        for s in matrix.series
        if all(matrix.cells[(s, m)] is not None for m in matrix.methods)
    ]
    table, report = analysis.analyze(matrix.subset(rows), alpha=args.alpha)
    analysis.write_report(report, args.out_report)
    print(f"wrote {args.out_report} (chi2={report.friedman_chi2:.4f}, p={report.friedman_p:.4g})")
    if args.out_svg:
        Path(args.out_svg).write_text(analysis.cd_diagram(table, report), encoding="utf-8")
        print(f"wrote {args.out_svg}")
    if args.out_ranks:
        table.write_csv(args.out_ranks)
        print(f"wrote {args.out_ranks}")
    return 0


def cmd_simulate_agreement(args: argparse.Namespace) -> int:
    db = load_annotations(args.annotations, args.annotation_base)
    lengths = {s.name: s.n_obs for s in _load_dataset_dir(args.dataset_dir)}
    validate_annotations(db, lengths)
    eta = annosim.estimate_eta(db) if args.eta == "auto" else float(args.eta)
    results = {}
    for name in sorted(db):
        if len(db[name]) < 2:
            print(f"skipping {name}: fewer than 2 annotators", file=sys.stderr)
            continue
        cfg = annosim.SimConfig(
            eta=eta,
            iterations=args.iters,
            metric=args.metric,
            seed=args.seed if args.seed is not None else 0,
            metric_cfg=MetricConfig(margin=args.margin),
        )
        results[name] = annosim.agreement_pvalue(db[name], lengths[name], cfg, jobs=args.jobs)
        print(f"{name}: observed={results[name].observed:.4f} p={results[name].p_hat:.5f}")
    annosim.write_agreement_report(results, args.out, args.out_md)
    print(f"wrote {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    names = list(synthgen.SPECS) if args.name == "all" else [args.name]
    for name in names:
        data_path, truth_path = synthgen.write_series(name, args.out, args.seed)
        print(f"wrote {data_path} and {truth_path}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    from .store import AnnotationStore

    store = AnnotationStore(
        root=args.store,
        target_annotators=args.target_annotators,
        pass_threshold=args.intro_threshold,
        seed=args.seed,
    )
    if args.dataset_dir:
        registered = set(store.assignment_counts())
        for series in _load_dataset_dir(args.dataset_dir):
            if series.name not in registered:
                store.register_series(series)
    admin_token = args.admin_token or secrets.token_hex(16)
    if not args.admin_token:
        token_path = Path(args.store) / "admin_token.txt"
        token_path.write_text(admin_token, encoding="utf-8")
        print(f"admin token written to {token_path}")
    app = create_app(store, admin_token, args.assets)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpdbench", description=__doc__)
    parser.add_argument(
        "--seed", type=int, default=None,
        help="random seed (default: 0, or each generator's own fixed seed)",
    )
    parser.add_argument("--jobs", type=int, default=1, help="worker parallelism")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a Default or Oracle experiment")
    run.add_argument("--dataset-dir", required=True)
    run.add_argument("--annotations")
    run.add_argument("--annotation-base", type=int, default=1, choices=(0, 1))
    run.add_argument("--mode", choices=experiments.MODES, default="default")
    run.add_argument("--detectors", help="comma-separated detector names")
    run.add_argument("--timeout", type=float, default=None, help="seconds per configuration")
    run.add_argument("--margin", type=int, default=5)
    run.add_argument("--out", required=True, help="output records JSONL path")
    run.set_defaults(fn=cmd_run)

    evaluate = sub.add_parser("evaluate", help="score detection records")
    evaluate.add_argument("--records", required=True)
    evaluate.add_argument("--annotations", required=True)
    evaluate.add_argument("--annotation-base", type=int, default=1, choices=(0, 1))
    evaluate.add_argument("--dataset-dir", required=True)
    evaluate.add_argument("--margin", type=int, default=5)
    evaluate.add_argument("--metrics", default="cover,f1")
    evaluate.add_argument("--out", required=True, help="output stem, e.g. scores.csv")
    evaluate.set_defaults(fn=cmd_evaluate)

    analyze = sub.add_parser("analyze", help="rank methods and test differences")
    analyze.add_argument("--scores", required=True, help="score matrix CSV")
    analyze.add_argument("--alpha", type=float, default=0.05)
    analyze.add_argument("--out-report", required=True)
    analyze.add_argument("--out-svg")
    analyze.add_argument("--out-ranks")
    analyze.set_defaults(fn=cmd_analyze)

    simulate = sub.add_parser(
        "simulate-agreement", help="null-model p-values for annotator agreement"
    )
    simulate.add_argument("--annotations", required=True)
    simulate.add_argument("--annotation-base", type=int, default=1, choices=(0, 1))
    simulate.add_argument("--dataset-dir", required=True)
    simulate.add_argument("--eta", default="auto")
    simulate.add_argument("--iters", type=int, default=annosim.DEFAULT_ITERATIONS)
    simulate.add_argument("--metric", choices=("cover", "f1"), default="f1")
    simulate.add_argument("--margin", type=int, default=5)
    simulate.add_argument("--out", required=True)
    simulate.add_argument("--out-md")
    simulate.set_defaults(fn=cmd_simulate_agreement)

    synth = sub.add_parser("synth", help="generate a synthetic series")
    synth.add_argument("--name", required=True, choices=[*synthgen.SPECS, "all"])
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(fn=cmd_synth)

    serve = sub.add_parser("serve", help="start the annotation service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--store", required=True, help="event log directory")
    serve.add_argument("--assets", help="static frontend directory")
    serve.add_argument("--dataset-dir", help="series to register on startup")
    serve.add_argument("--admin-token")
    serve.add_argument("--target-annotators", type=int, default=5)
    serve.add_argument("--intro-threshold", type=float, default=0.8)
    serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # runtime failures exit 1 with a message
        if getattr(args, "verbose", False):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
