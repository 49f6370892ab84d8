"""Walk one behavior tree by hand: generate, rerank, select, emit.

Each of the four planning tasks runs this same four-leaf sequence. Here
the accommodation tree is driven step by step so the intermediate pool
is visible. Run from the repository root:

    python3 demos/02_behavior_tree.py
"""

import json
from pathlib import Path

from bforest.btree import (
    EXHAUSTED,
    BehaviorTree,
    HeuristicWeights,
    PlanningContext,
    Status,
    activate_constraints,
    generate_candidates,
    next_candidate,
    rerank,
    tick,
)
from bforest.catalog import load_catalog_doc
from bforest.domain import Constraint, ConstraintKind, Query, Severity, TaskKind
from bforest.llm import MockBackend

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> None:
    catalog = load_catalog_doc(json.loads((FIXTURES / "tiny.json").read_text()))
    # a two-night stay, so the accommodation tree has real work to do
    query = Query.from_doc(json.loads((FIXTURES / "queries" / "q-family.json").read_text()))

    prefer_home = Constraint(
        id="soft-home",
        kind=ConstraintKind.ROOM_TYPE,
        severity=Severity.SOFT,
        payload={"room_type": "entire_home"},
    )
    tree = BehaviorTree.standard(TaskKind.ACCOMMODATION, locals_=(prefer_home,))
    print(f"tree for {tree.task.value}: "
          f"{[child.name for child in tree.root.children]}")

    # Constraint activation is positional: hard locals gate generation,
    # soft locals only come alive at the rerank leaf.
    for node in tree.root.children[:2]:
        act = activate_constraints(tree, node, round_index=1)
        print(f"  at {act.node_name}: activates {[c.id for c in act.activated]}")

    backend = MockBackend()
    hint = 40_000  # the coordinator would derive this from the budget split
    pool = generate_candidates(tree, catalog, query, backend, hint, k=8)
    print(f"\ngenerated {len(pool)} candidates under hint {hint}:")
    for cand in pool.candidates:
        print(f"  {cand.subplan.resource_ids} cost={cand.cost} "
              f"soft={cand.soft_fraction:.1f}")

    rerank(pool, HeuristicWeights())
    print("\nafter rerank (cheap, soft-satisfying, well-rated first):")
    for cand in pool.candidates:
        print(f"  {cand.subplan.resource_ids} score={cand.score:.3f}")

    print("\nwalking the cursor:")
    while True:
        picked = next_candidate(pool)
        if picked is EXHAUSTED:
            print("  pool exhausted; the coordinator would regenerate or give up")
            break
        print(f"  -> {picked.resource_ids} for {picked.total_cost}")

    # The tree itself is just structure; leaves resolve through whatever
    # handler table the context carries. A trivial table shows the
    # short-circuit: one failing leaf fails the whole sequence.
    log = []
    handlers = {
        "GenerateCandidates": lambda ctx: (log.append("generate"), Status.SUCCESS)[1],
        "RerankCandidates": lambda ctx: (log.append("rerank"), Status.SUCCESS)[1],
        "SelectNext": lambda ctx: (log.append("select"), Status.FAILURE)[1],
        "EmitSubPlan": lambda ctx: (log.append("emit"), Status.SUCCESS)[1],
    }
    status = tick(BehaviorTree.standard(TaskKind.DINING), PlanningContext(handlers))
    print(f"\nstub tick ran {log} then returned {status.name} (emit never reached)")


if __name__ == "__main__":
    main()
