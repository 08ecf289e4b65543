"""
Reporting utilities for the CFDG toolkit
Turns coverage reports, invariant checks and oracle results into pandas
tables for the terminal, or into JSON.
"""

import json
import logging
from typing import Iterable, List, Sequence

import pandas as pd

from core.services.coverage import CoverageReport
from core.services.decision_inference import InvariantReport, MergeStats
from core.services.runs_traces import TestSuite

logger = logging.getLogger(__name__)

OBLIGATION_COLUMNS = ["decision", "kind", "subject", "status", "witnesses", "detail"]


def _witness_text(witnesses) -> str:
    if not witnesses:
        return ""
    shown = ", ".join("/".join(w) for w in witnesses[:3])
    more = len(witnesses) - 3
    return f"{shown} (+{more})" if more > 0 else shown


def obligations_frame(report: CoverageReport) -> pd.DataFrame:
    rows = [
        {
            "decision": "" if o.decision_id is None else o.decision_id,
            "kind": o.kind.value,
            "subject": o.subject,
            "status": o.status.value,
            "witnesses": _witness_text(o.witnesses),
            "detail": o.detail,
        }
        for o in report.obligations
    ]
    return pd.DataFrame(rows, columns=OBLIGATION_COLUMNS)


def summary_frame(reports: Iterable[CoverageReport]) -> pd.DataFrame:
    rows = [
        {
            "criterion": r.criterion.value,
            "satisfied": r.satisfied_count,
            "total": len(r.obligations),
            "verdict": f"{r.verdict_percent:.1f}%",
        }
        for r in reports
    ]
    return pd.DataFrame(rows, columns=["criterion", "satisfied", "total", "verdict"])


def render_report(report: CoverageReport, show_all: bool = True) -> str:
    header = (
        f"{report.criterion.value.upper()} coverage "
        f"[semantics={report.semantics.value}, loop-mode={report.loop_mode.value}]: "
        f"{report.satisfied_count}/{len(report.obligations)} obligations, "
        f"{report.verdict_percent:.1f}%"
    )
    frame = obligations_frame(report)
    if not show_all:
        frame = frame[frame["status"] != "satisfied"]
    if frame.empty:
        return header
    return header + "\n" + frame.to_string(index=False)


def render_reports(reports: Sequence[CoverageReport], fmt: str = "text") -> str:
    if fmt == "json":
        payload = [r.to_dict() for r in reports]
        return json.dumps(payload[0] if len(payload) == 1 else payload, indent=2)
    blocks = [render_report(r) for r in reports]
    if len(reports) > 1:
        blocks.append(summary_frame(reports).to_string(index=False))
    return "\n\n".join(blocks)


def invariant_frame(report: InvariantReport) -> pd.DataFrame:
    rows = []
    for check in report.checks:
        rows.append(
            {
                "decision": check.decision.decision_id,
                "entry": check.decision.entry,
                "members": " ".join(sorted(check.decision.members)),
                "successors": " ".join(sorted(check.external_successors)),
                "ok": "yes" if check.ok else "NO",
            }
        )
    return pd.DataFrame(rows, columns=["decision", "entry", "members", "successors", "ok"])


def render_invariants(name: str, report: InvariantReport, stats: MergeStats) -> str:
    lines = [
        f"{name}: {len(report.checks)} decision(s), {stats.merges_performed} merge(s), "
        f"max visits per vertex {stats.max_visits}"
    ]
    if report.checks:
        lines.append(invariant_frame(report).to_string(index=False))
    lines += [f"  ! {problem}" for problem in report.problems()]
    return "\n".join(lines)


def suites_frame(suites: Sequence[TestSuite]) -> pd.DataFrame:
    rows = [{"suite": index + 1, "tests": " ".join(suite.names)} for index, suite in enumerate(suites)]
    return pd.DataFrame(rows, columns=["suite", "tests"])


def render_suites(suites: Sequence[TestSuite], symbols: Sequence[str]) -> List[str]:
    lines = [f"symbols: {' '.join(symbols)}"]
    if not suites:
        lines.append("no suite satisfies the criterion")
        return lines
    lines.append(f"{len(suites)} minimal suite(s) of size {len(suites[0])}")
    lines.append(suites_frame(suites).to_string(index=False))
    return lines
