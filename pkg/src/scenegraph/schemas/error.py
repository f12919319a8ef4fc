from typing import Any, Dict, Optional
from pydantic import BaseModel, ConfigDict, Field


class ErrorResponse(BaseModel):
    """Machine-readable error object printed by failing CLI commands."""

    model_config = ConfigDict(populate_by_name=True)

    status: str = "error"
    error: str
    detail: Optional[str] = None
    exit_code: int = Field(1, alias="exitCode")
    context: Dict[str, Any] = Field(default_factory=dict)
