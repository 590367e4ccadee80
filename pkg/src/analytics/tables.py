# src/analytics/tables.py
"""
Deterministic table output.

CSV: '#'-prefixed metadata lines, then a header row and numeric columns with
17 significant digits. JSON mirrors the same records as
{"metadata": {...}, "records": [...]} with sorted keys.
"""
import json
import os
from typing import Any, Dict, List

import pandas as pd

from src.config import TOOL_NAME, TOOL_VERSION, output
from src.logger import get_logger

logger = get_logger(__name__)

FORMATS = ("csv", "json", "both")


def table_metadata(command: str, argv: List[str], **extra: Any) -> Dict[str, Any]:
    meta = {"tool": TOOL_NAME, "version": TOOL_VERSION, "command": command, "argv": " ".join(argv)}
    meta.update({k: v for k, v in extra.items() if v is not None})
    return meta


def _sorted_frame(df: pd.DataFrame, sort_by: List[str]) -> pd.DataFrame:
    keys = [c for c in sort_by if c in df.columns]
    return df.sort_values(keys, kind="mergesort").reset_index(drop=True) if keys else df


def write_csv(df: pd.DataFrame, path: str, metadata: Dict[str, Any]) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key in sorted(metadata):
            fh.write(f"# {key}: {metadata[key]}\n")
        df.to_csv(fh, index=False, float_format=output("float_format"), lineterminator="\n")
    return path


def write_json(df: pd.DataFrame, path: str, metadata: Dict[str, Any]) -> str:
    payload = {"metadata": metadata, "records": df.to_dict(orient="records")}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def write_table(df: pd.DataFrame, out_dir: str, stem: str, fmt: str, metadata: Dict[str, Any],
                sort_by: List[str] = ()) -> List[str]:
    """Write df as <stem>.csv and/or <stem>.json under out_dir; returns the written paths."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown output format '{fmt}'")
    os.makedirs(out_dir, exist_ok=True)
    df = _sorted_frame(df, list(sort_by))
    paths = []
    if fmt in ("csv", "both"):
        paths.append(write_csv(df, os.path.join(out_dir, f"{stem}.csv"), metadata))
    if fmt in ("json", "both"):
        paths.append(write_json(df, os.path.join(out_dir, f"{stem}.json"), metadata))
    for p in paths:
        logger.info("Wrote %d rows -> %s", len(df), p)
    return paths


def read_table_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
