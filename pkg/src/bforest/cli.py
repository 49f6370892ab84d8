"""Command line front end.

Subcommands:
  plan      run the planner over a query set and write one result per query
  evaluate  score previously written results against the constraint suite
  bench     time parallel vs sequential planting on the same inputs

Exit codes: 0 success (plan: every query delivered), 1 at least one query
failed (or bench outputs diverged), 2 bad arguments, unreadable inputs, or
malformed configuration.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from pathlib import Path

from .catalog import Catalog, CatalogError, load_catalog, load_catalog_csv
from .config import ABLATIONS, ConfigError, EngineConfig, load_config, make_backend
from .domain import ConstraintSet, Query, canonical_json
from .evaluation import PlanEvaluation, check_plan, report
from .llm import BackendError
from .pipeline import PlanResult, plan

__all__ = ["main"]


class _CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _add_catalog_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--catalog", help="catalog JSON file")
    group.add_argument("--import-csv", dest="import_csv", help="directory of catalog CSV files")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bforest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan a set of queries")
    _add_catalog_args(p_plan)
    p_plan.add_argument("--queries", required=True, help="query JSON file or directory")
    p_plan.add_argument("--out", required=True, help="output directory for result files")
    p_plan.add_argument("--config", help="engine/backend configuration JSON")
    p_plan.add_argument("--mode", choices=("parallel", "sequential"))
    p_plan.add_argument(
        "--ablate", action="append", choices=ABLATIONS, help="disable one mechanism (repeatable)"
    )
    p_plan.add_argument("--jobs", type=int, help="queries planned concurrently")
    p_plan.add_argument("--pool-size", type=int, dest="pool_size")
    p_plan.add_argument("--max-rounds", type=int, dest="max_rounds")
    p_plan.add_argument(
        "--llm-verify", action="store_true", help="attach an advisory backend review to each plan"
    )

    p_eval = sub.add_parser("evaluate", help="score result files")
    _add_catalog_args(p_eval)
    p_eval.add_argument("--queries", required=True)
    p_eval.add_argument("--results", required=True, help="directory of *.result.json files")
    p_eval.add_argument("--out", required=True)

    p_bench = sub.add_parser("bench", help="compare parallel and sequential wall time")
    _add_catalog_args(p_bench)
    p_bench.add_argument("--queries", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--config", help="engine/backend configuration JSON")
    p_bench.add_argument(
        "--latency-ms", type=float, default=200.0, dest="latency_ms",
        help="injected mock backend latency per call (default 200)",
    )
    return parser


def _load_catalog_arg(args: argparse.Namespace) -> Catalog:
    try:
        if args.import_csv:
            return load_catalog_csv(args.import_csv)
        return load_catalog(args.catalog)
    except (CatalogError, OSError) as exc:
        raise _CliError(2, f"catalog: {exc}") from exc


def _load_queries(path_str: str) -> list[Query]:
    path = Path(path_str)
    if not path.exists():
        raise _CliError(2, f"queries: no such path: {path}")
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    if not files:
        raise _CliError(2, f"queries: no *.json files in {path}")
    queries: list[Query] = []
    for f in files:
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise _CliError(2, f"queries: {f}: {exc}") from exc
        docs = doc if isinstance(doc, list) else [doc]
        for one in docs:
            try:
                queries.append(Query.from_doc(one))
            except (KeyError, TypeError, ValueError) as exc:
                raise _CliError(2, f"queries: {f}: {exc}") from exc
    seen: set[str] = set()
    for q in queries:
        if q.id in seen:
            raise _CliError(2, f"queries: duplicate query id {q.id!r}")
        seen.add(q.id)
    return queries


def _load_engine_config(args: argparse.Namespace) -> tuple[EngineConfig, dict]:
    try:
        doc = load_config(getattr(args, "config", None))
        engine = EngineConfig.from_doc(doc.get("engine", {}))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        raise _CliError(2, f"config: {exc}") from exc
    return engine, doc


def _apply_plan_overrides(engine: EngineConfig, args: argparse.Namespace) -> EngineConfig:
    try:
        return engine.with_overrides(
            mode=args.mode,
            pool_size=args.pool_size,
            max_rounds=args.max_rounds,
            jobs=args.jobs,
            llm_verify=True if args.llm_verify else None,
            ablations=frozenset(args.ablate) if args.ablate else None,
        )
    except ConfigError as exc:
        raise _CliError(2, f"config: {exc}") from exc


def _run_batch(
    queries: list[Query], catalog: Catalog, backend, engine: EngineConfig
) -> list[PlanResult]:
    jobs = engine.jobs or 1
    if jobs <= 1 or len(queries) <= 1:
        return [plan(q, catalog, backend, engine) for q in queries]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda q: plan(q, catalog, backend, engine), queries))


def _write_results(results: list[PlanResult], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        target = out_dir / f"{result.query_id}.result.json"
        target.write_text(canonical_json(result.to_doc()), encoding="utf-8")


def cmd_plan(args: argparse.Namespace) -> int:
    catalog = _load_catalog_arg(args)
    queries = _load_queries(args.queries)
    engine, doc = _load_engine_config(args)
    engine = _apply_plan_overrides(engine, args)
    try:
        backend = make_backend(doc.get("backend", {}))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        raise _CliError(2, f"backend: {exc}") from exc

    results = _run_batch(queries, catalog, backend, engine)
    _write_results(results, Path(args.out))

    failed = 0
    for result in results:
        if result.delivered:
            cost = result.plan.total_cost if result.plan else 0
            print(f"{result.query_id}: delivered rounds={result.rounds_used} cost={cost}")
        else:
            failed += 1
            print(f"{result.query_id}: failed ({result.reason})")
    print(f"{len(results) - failed}/{len(results)} delivered -> {args.out}")
    return 1 if failed else 0


def _read_results_dir(path_str: str) -> dict[str, PlanResult]:
    path = Path(path_str)
    if not path.is_dir():
        raise _CliError(2, f"results: not a directory: {path}")
    results: dict[str, PlanResult] = {}
    for f in sorted(path.glob("*.result.json")):
        try:
            result = PlanResult.from_doc(json.loads(f.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise _CliError(2, f"results: {f}: {exc}") from exc
        results[result.query_id] = result
    return results


def cmd_evaluate(args: argparse.Namespace) -> int:
    catalog = _load_catalog_arg(args)
    queries = _load_queries(args.queries)
    results = _read_results_dir(args.results)
    if not results:
        print("warning: no result files found; reporting zero rates", file=sys.stderr)

    evaluations = []
    for query in queries:
        result = results.get(query.id)
        delivered = bool(result and result.delivered and result.plan)
        the_plan = result.plan if delivered and result else None
        cs_doc = result.constraint_set if result else None
        cs = ConstraintSet.from_doc(cs_doc) if cs_doc else ConstraintSet.empty()
        checks = check_plan(the_plan, cs, catalog, query)
        evaluations.append(PlanEvaluation(query_id=query.id, delivered=delivered, checks=checks))

    rep = report(evaluations)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(canonical_json(rep.to_doc()), encoding="utf-8")
    (out_dir / "report.txt").write_text(rep.render_text(), encoding="utf-8")
    (out_dir / "violations.csv").write_text(rep.violations_csv(), encoding="utf-8")
    print(rep.render_text(), end="")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    catalog = _load_catalog_arg(args)
    queries = _load_queries(args.queries)
    engine, doc = _load_engine_config(args)

    timings: dict[str, float] = {}
    outputs: dict[str, list[PlanResult]] = {}
    for mode in ("parallel", "sequential"):
        try:
            backend = make_backend(doc.get("backend", {}), latency_ms=args.latency_ms)
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            raise _CliError(2, f"backend: {exc}") from exc
        cfg = engine.with_overrides(mode=mode)
        start = time.perf_counter()
        outputs[mode] = [plan(q, catalog, backend, cfg) for q in queries]
        timings[mode] = time.perf_counter() - start

    identical = all(
        a.comparable_json() == b.comparable_json()
        for a, b in zip(outputs["parallel"], outputs["sequential"])
    )
    ratio = timings["parallel"] / timings["sequential"] if timings["sequential"] else 0.0
    doc_out = {
        "queries": len(queries),
        "latency_ms": args.latency_ms,
        "parallel_s": timings["parallel"],
        "sequential_s": timings["sequential"],
        "ratio": ratio,
        "identical": identical,
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "bench.json").write_text(canonical_json(doc_out), encoding="utf-8")
    print(
        f"parallel {timings['parallel']:.3f}s  sequential {timings['sequential']:.3f}s  "
        f"ratio {ratio:.2f}  identical={identical}"
    )
    if not identical:
        print("error: parallel and sequential plans diverged", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {"plan": cmd_plan, "evaluate": cmd_evaluate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage already
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _CliError as exc:
        print(f"bforest: error: {exc}", file=sys.stderr)
        return exc.code
    except BackendError as exc:
        print(f"bforest: backend error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
