"""Generate the JSON schema files shipped under docs/schemas.

Run ``python -m trading_prophets.schemas [outdir]``.  The test suite
regenerates the schemas into a temp directory and diffs them against the
committed copies, so the files never drift from the pydantic models.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

from .service import (
    BanditInstanceModel,
    ExactResponse,
    InstanceModel,
    PolicyModel,
    SimReportModel,
    ThresholdResponse,
)

SCHEMAS = {
    "instance.schema.json": InstanceModel,
    "bandit_instance.schema.json": BanditInstanceModel,
    "policy.schema.json": PolicyModel,
    "sim_report.schema.json": SimReportModel,
    "exact_report.schema.json": ExactResponse,
    "threshold_spec.schema.json": ThresholdResponse,
}


def render() -> dict[str, str]:
    out = {}
    for name, model in SCHEMAS.items():
        schema = model.model_json_schema()
        out[name] = json.dumps(schema, indent=2, sort_keys=True) + "\n"
    return out


def write(outdir) -> list[Path]:
    d = Path(outdir)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in render().items():
        p = d / name
        p.write_text(text)
        written.append(p)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "docs/schemas"
    for p in write(target):
        print(p)
