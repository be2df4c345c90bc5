from fastapi import APIRouter, HTTPException
from pydantic import ValidationError
import logging

from app.schemas.query import (
    CiRequest,
    CommandResult,
    EciRequest,
    EquivRequest,
    MarginalRequest,
    PcBoundsRequest,
)
from cde.ci_engine import Method
from cde.errors import CapacityError, CdeError
from cde.parser import parse_graph_file
from cde.queries import ci_result, eci_result, equiv_result, marginal_result, pc_bounds_result

router = APIRouter()
logger = logging.getLogger(__name__)


def _run(label: str, evaluate) -> dict:
    """Evaluate one query; library errors become 413 (capacity) or 422."""
    try:
        result: CommandResult = evaluate()
    except CapacityError as exc:
        logger.exception("%s query exceeded capacity", label)
        raise HTTPException(status_code=413, detail=str(exc))
    except (CdeError, ValidationError) as exc:
        logger.exception("%s query rejected", label)
        raise HTTPException(status_code=422, detail=str(exc))
    return result.dump()


@router.post("/ci")
def ci(payload: CiRequest):
    """Is the conditional independence represented by the graph?"""
    return _run("ci", lambda: ci_result(parse_graph_file(payload.graph), payload.query, Method(payload.method)))


@router.post("/eci")
def eci(payload: EciRequest):
    return _run("eci", lambda: eci_result(parse_graph_file(payload.graph), payload.query))


@router.post("/equiv")
def equiv(payload: EquivRequest):
    return _run("equiv", lambda: equiv_result(parse_graph_file(payload.graph), parse_graph_file(payload.other)))


@router.post("/pc-bounds")
def pc_bounds(payload: PcBoundsRequest):
    """Bounds on the probability of causation; the assumption text is echoed in `inputs`."""
    return _run("pc-bounds", lambda: pc_bounds_result(payload.p0, payload.p1, payload.method))


@router.post("/marginal")
def marginal(payload: MarginalRequest):
    return _run(
        "marginal",
        lambda: marginal_result(parse_graph_file(payload.graph), payload.variables, payload.given),
    )
