# src/analytics/metrics_builder.py
"""
Run rollup.
Each CLI command appends one row to <output>/run_history.csv; build_metrics()
folds the history into a single <output>/runs.json keyed by command.
"""
import json
import os
from datetime import datetime, timezone
from typing import Any, Dict

import pandas as pd

from src.logger import get_logger

logger = get_logger(__name__)

HISTORY_NAME = "run_history.csv"
ROLLUP_NAME = "runs.json"
KEEP_RUNS = 14


def append_run_summary(out_dir: str, summary: Dict[str, Any]) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, HISTORY_NAME)
    try:
        pd.DataFrame([summary]).to_csv(path, mode="a", header=not os.path.exists(path), index=False)
        logger.debug("Appended run summary for %s -> %s", summary.get("command"), path)
    except Exception:
        logger.exception("Failed to append run summary to %s", path)
    return path


def _gather_command_history(out_dir: str) -> Dict[str, Any]:
    path = os.path.join(out_dir, HISTORY_NAME)
    if not os.path.exists(path):
        return {}
    try:
        df = pd.read_csv(path)
    except Exception as e:
        logger.exception("Failed to parse %s: %s", path, e)
        return {}
    out = {}
    for command, group in df.groupby("command", sort=True):
        group = group.sort_values("run_time").tail(KEEP_RUNS)
        series = [{
            "run_time": r.get("run_time"),
            "status": r.get("status"),
            "rows": int(r.get("rows", 0) or 0),
            "duration_sec": float(r.get("duration_sec", 0.0) or 0.0),
        } for _, r in group.iterrows()]
        out[command] = {"latest_run": series[-1]["run_time"], "series": series, "summary": series[-1]}
    return out


def build_metrics(out_dir: str) -> str:
    """Rewrite runs.json from the run history; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    commands = _gather_command_history(out_dir)
    latest = [c["summary"] for c in commands.values()]
    payload = {
        "generated_at": datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S UTC"),
        "global": {
            "commands_run": len(commands),
            "rows_written": sum(s["rows"] for s in latest),
            "failed": sorted(name for name, c in commands.items() if c["summary"]["status"] != "ok"),
        },
        "commands": commands,
    }
    out_path = os.path.join(out_dir, ROLLUP_NAME)
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        logger.info("✅ Run rollup generated -> %s", out_path)
    except Exception as e:
        logger.exception("Failed to write %s: %s", out_path, e)
    return out_path
