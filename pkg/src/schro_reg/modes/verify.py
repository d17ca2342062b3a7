"""
verify mode: run the acceptance suite and write report.json.
"""

from pathlib import Path
from typing import Any, Optional, Sequence

from schro_reg.modes.context import ScenarioContext


def handle_verify(
    ctx: ScenarioContext, out: Path, only: Optional[Sequence[int]] = None
) -> dict[str, Any]:
    """
    Write report.json.

    Returns:
        Summary with the pass count and exit_hint
    """
    from schro_reg.verify import run_verification

    report = run_verification(ctx, only)
    report.write(out / "report.json")
    return {
        "scenario": report.scenario,
        "passed": sum(c.passed for c in report.criteria),
        "total": len(report.criteria),
        "failed": [c.id for c in report.criteria if not c.passed],
        "exit_hint": report.exit_hint,
    }
