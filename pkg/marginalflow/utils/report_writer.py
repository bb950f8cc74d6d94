import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from marginalflow.errors import OutputWriteError
from marginalflow.models.arrays import to_pairs
from marginalflow.models.flow import FlowTrace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["t", "D", "variance", "dist_from_start", "min_gap"]


def _jsonable(value: Any):
    """json.dumps fallback for numpy scalars, arrays and pydantic models"""
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return to_pairs(value.ravel())
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document: Any) -> str:
    return json.dumps(document, indent=2, default=_jsonable, allow_nan=True) + "\n"


def write_json(document: Any, path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """Write to path, or to stdout when path is None"""
    text = dumps(document)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputWriteError(f"could not write {path}: {e}") from e
    return path


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """RFC-4180 CSV with \\n line endings; stdout when path is None"""
    if path is None:
        sys.stdout.write(frame.to_csv(index=False, lineterminator="\n", na_rep="nan"))
        sys.stdout.flush()
        return None
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            frame.to_csv(handle, index=False, lineterminator="\n", na_rep="nan")
    except OSError as e:
        raise OutputWriteError(f"could not write {path}: {e}") from e
    return path


def trace_frame(trace: FlowTrace) -> pd.DataFrame:
    return pd.DataFrame({
        "t": trace.times,
        "D": trace.D_values,
        "variance": trace.variances,
        "dist_from_start": trace.distances,
        "min_gap": trace.min_gaps,
    }, columns=TRACE_COLUMNS)


def snapshots_document(trace: FlowTrace) -> Dict[str, Any]:
    return {
        "constraint": trace.constraint.name,
        "termination_reason": trace.termination_reason.value,
        "times": [float(t) for t in trace.snapshot_times],
        "D": [float(v) for v in trace.snapshot_D],
        "snapshots": [to_pairs(psi) for psi in trace.snapshots],
        "terminal_state": to_pairs(trace.terminal_state),
    }


class WorkbookWriter:
    """One sheet per table plus a Metadata sheet"""

    def generate(self, tables: Dict[str, pd.DataFrame], metadata: Dict[str, Any],
                 output_path: Union[str, Path]) -> bool:
        output_path = Path(output_path)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            with pd.ExcelWriter(output_path, engine="openpyxl") as writer:
                for sheet, frame in tables.items():
                    # Excel caps sheet names at 31 characters
                    frame.to_excel(writer, sheet_name=sheet[:31], index=False)

                rows = {
                    "Property": list(metadata.keys()),
                    "Value": [str(v) for v in metadata.values()],
                }
                pd.DataFrame(rows).to_excel(writer, sheet_name="Metadata", index=False)

            logger.info(f"✅ Workbook created successfully: {output_path}")
            return True

        except Exception as e:
            logger.error(f"❌ Failed to create workbook {output_path}: {str(e)}")
            return False
