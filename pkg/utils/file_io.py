"""
Artifact input/output: experiment documents, trajectory CSVs and JSON summaries.
"""

import csv
import json
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from config import get_output_config
from utils.exceptions import FileError, validate_file_exists


def format_float(value: Optional[float]) -> str:
    """17 significant digits; empty for missing values."""
    if value is None:
        return ""
    return format(float(value), get_output_config().FLOAT_FORMAT)


def trajectory_header(dim: int) -> List[str]:
    return (["iter", "t", "subopt", "H", "V"]
            + [f"x_{i}" for i in range(dim)] + [f"p_{i}" for i in range(dim)])


def trajectory_row(iteration: int, t: float, subopt: Optional[float], H: float, V: Optional[float],
                   x: Sequence[float], p: Sequence[float]) -> List[str]:
    return ([str(int(iteration)), format_float(t), format_float(subopt), format_float(H), format_float(V)]
            + [format_float(v) for v in x] + [format_float(v) for v in p])


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise FileError(f"Cannot write {path}: {e}", {'path': str(path)})
    return path


def read_csv(path: Path) -> List[dict]:
    validate_file_exists(str(path))
    with open(path, 'r', newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))


def _to_builtin(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_to_builtin, allow_nan=True)


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_json(data) + "\n", encoding='utf-8')
    except OSError as e:
        raise FileError(f"Cannot write {path}: {e}", {'path': str(path)})
    return path


def read_json(path: Path) -> Any:
    """Parse a JSON document, reporting missing or malformed files as FileError."""
    validate_file_exists(str(path))
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise FileError(f"Malformed JSON in {path}: {e}", {'path': str(path)})
