"""Plan a batch of queries, evaluate every plan, and print the metric table.

Micro rates pool individual checks across the batch; macro rates count
plans whose checks all pass. The final rate additionally requires that a
plan was delivered at all. Run from the repository root:

    python3 demos/04_score_batch.py
"""

import json
from pathlib import Path

from bforest.catalog import load_catalog_doc
from bforest.config import EngineConfig
from bforest.domain import ConstraintSet, Query
from bforest.evaluation import PlanEvaluation, check_plan, report
from bforest.llm import MockBackend
from bforest.pipeline import plan

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> None:
    catalog = load_catalog_doc(json.loads((FIXTURES / "tiny.json").read_text()))

    evaluations = []
    for path in sorted((FIXTURES / "queries").glob("*.json")):
        query = Query.from_doc(json.loads(path.read_text()))
        result = plan(query, catalog, MockBackend(), EngineConfig())
        cs = (
            ConstraintSet.from_doc(result.constraint_set)
            if result.constraint_set
            else ConstraintSet.empty()
        )
        checks = check_plan(result.plan, cs, catalog, query)
        evaluations.append(PlanEvaluation(query.id, result.delivered, tuple(checks)))
        verdict = "delivered" if result.delivered else f"failed: {result.reason}"
        print(f"{query.id}: {verdict}, {sum(c.passed for c in checks)}/{len(checks)} checks pass")

    rep = report(evaluations)
    print()
    print(rep.render_text())
    print("violation tally:")
    print(rep.violations_csv())


if __name__ == "__main__":
    main()
