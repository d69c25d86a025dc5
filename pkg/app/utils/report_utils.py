import dataclasses
import hashlib
import json
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy arrays, dataclasses, enums and non-finite floats into plain JSON values.

    Args:
        value: Any report fragment

    Returns:
        A structure json.dumps accepts with allow_nan=False
    """
    if isinstance(value, Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    return value


def canonical_json(payload: Any) -> str:
    """Sorted-key compact JSON; identical payloads give identical bytes."""
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"), allow_nan=False)


def pretty_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def content_id(payload: Dict[str, Any], exclude: str = "certificate_id") -> str:
    """SHA-256 over the canonical JSON of `payload` without its own id field."""
    body = {k: v for k, v in to_jsonable(payload).items() if k != exclude}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def write_json_atomic(path: Union[str, Path], payload: Any) -> Path:
    """Write pretty JSON through a temp file and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as stream:
            stream.write(pretty_json(payload))
        os.replace(temp_name, target)
    except Exception:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return target


def read_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as stream:
        return json.load(stream)


def parse_number(value: Optional[Union[float, str]]) -> Optional[float]:
    """Inverse of to_jsonable for scalars ("inf" strings back to floats)."""
    if value is None:
        return None
    if isinstance(value, str):
        return float(value)
    return float(value)
