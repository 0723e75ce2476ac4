import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def convert_values(value: Any) -> Any:
    """
    Recursively convert values that json cannot write (numpy scalars and arrays, complex
    numbers, sets, paths, pydantic models, non-finite floats) into JSON-safe data.

    Non-finite floats become the strings 'inf', '-inf' and 'nan', which float() and pydantic
    parse back.
    """
    if isinstance(value, BaseModel):
        return convert_values(value.model_dump())
    if isinstance(value, dict):
        return {str(k): convert_values(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [convert_values(v) for v in value]
    if isinstance(value, set):
        return sorted(convert_values(v) for v in value)
    if isinstance(value, np.ndarray):
        return convert_values(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": convert_values(value.real), "im": convert_values(value.imag)}
    if isinstance(value, Path):
        return str(value)
    if callable(value):
        return f"<function {getattr(value, '__name__', 'unknown_function')}>"
    if hasattr(value, "__dict__") and not isinstance(value, str):
        return f"<{value.__class__.__name__} object>"
    return value


class RunTracer:
    """
    Collects events of an experiment run (suite start/end, check verdicts) and writes them
    as JSON lines.

    Attributes:
        output_file (Path, optional): where write_logs() appends; None keeps events in memory.
        log_entries (List[dict]): buffered events.
    """

    def __init__(self, output_file: Optional[str] = None):
        self.output_file = Path(output_file) if output_file else None
        self.log_entries: List[Dict[str, Any]] = []

    def log_event(self, event_type: str, data: Dict[str, Any]) -> None:
        """
        Buffer an event, converting its payload to JSON-safe data.

        Args:
            event_type (str): label of the event, e.g. suite_start or check.
            data (Dict[str, Any]): payload; may hold numpy values and pydantic models.
        """
        try:
            payload = convert_values(dict(data))
        except (TypeError, ValueError) as e:
            logger.warning(f"Could not serialize {event_type} event: {e}")
            payload = {"error": f"Failed to serialize data: {e}"}
        self.log_entries.append({"event_type": event_type, "data": payload, "timestamp": time.time()})

    def write_logs(self) -> None:
        """Append buffered events to the output file in JSON lines format and clear the buffer."""
        if self.output_file is None:
            return
        self.output_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.output_file, "a", encoding="utf-8") as f:
            for entry in self.log_entries:
                f.write(json.dumps(entry) + "\n")
        logger.info(f"Wrote {len(self.log_entries)} trace events to {self.output_file}")
        self.log_entries.clear()
