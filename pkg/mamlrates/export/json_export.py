"""JSON export for reports.

Serializes pydantic report models (and plain containers of them) with orjson.
"""

from typing import Any

import orjson
from pydantic import BaseModel


def _default(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def report_to_json(report: Any) -> str:
    """Serialize a report model, list of models, or dict as indented JSON.

    Non-finite floats are written as null.

    Args:
        report: Pydantic model or JSON-compatible container of models.

    Returns:
        JSON text.
    """
    return orjson.dumps(
        report,
        default=_default,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY,
    ).decode()
