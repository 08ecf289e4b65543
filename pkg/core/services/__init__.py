# Services package for the CFDG toolkit
import pyparsing as pp

# the dot and expression grammars backtrack heavily without memoization
pp.ParserElement.enable_packrat()

from core.services.graph_core import (  # noqa: E402
    Cfdg,
    Cfg,
    Decision,
    build_cfg,
    compute_dominators,
    entry_and_exits,
    successors_of,
)
from core.services.decision_inference import (  # noqa: E402
    MergeStats,
    create_cfdg,
    merge,
    normalize_interstitial,
    restore_interstitial,
    verify_decision_invariants,
)
from core.services.runs_traces import (  # noqa: E402
    LoopMode,
    Run,
    TestSuite,
    decision_traversals,
    parse_traces,
    validate_run,
)
from core.services.dot_codec import (  # noqa: E402
    Dialect,
    DotDocument,
    detect_dialect,
    emit_annotated_dot,
    parse_dot,
)
from core.services.expr_harness import (  # noqa: E402
    enumerate_runs,
    expr_to_cfg,
    minimal_suites,
    parse_expr,
    simulate,
)
from core.services.coverage import (  # noqa: E402
    CoverageReport,
    Criterion,
    IndependenceSemantics,
    evaluate,
    evaluate_all,
)
