from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class CommandResult(BaseModel):
    """Machine-readable outcome of one command, shared by `--json` and the HTTP API."""
    schema_: int = Field(default=SCHEMA_VERSION, alias="schema")
    command: str
    inputs: Dict[str, Any]
    result: Any
    witness: Optional[List[str]] = None

    model_config = {"populate_by_name": True}

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, exclude_none=True)


class CiRequest(BaseModel):
    graph: str
    query: str
    method: Literal["moralisation", "d-separation"] = "moralisation"


class EciRequest(BaseModel):
    graph: str
    query: str


class EquivRequest(BaseModel):
    graph: str
    other: str


class PcBoundsRequest(BaseModel):
    p0: float
    p1: float
    method: Literal["vertices", "linprog"] = "vertices"


class MarginalRequest(BaseModel):
    graph: str
    variables: List[str]
    given: Dict[str, int] = Field(default_factory=dict)
