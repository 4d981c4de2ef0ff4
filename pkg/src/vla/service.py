"""HTTP facade over the verification engine.

Thin by design: requests resolve to the same CommandConfig the CLI uses,
run the same handlers, and return the reports as JSON documents.  Algebra
inputs come either from the named built-in corpus or as inline documents.
"""

from __future__ import annotations

from typing import List, Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, model_validator

from . import catalog
from .cli import _DISPATCH, CommandConfig, UsageError
from .leibniz import dump_algebra_doc
from .loopmod import DegreeOverflow
from .vertex import dump_perm_doc

app = FastAPI(
    title="vla",
    description="Exact verification engine for vertex Leibniz algebras",
    version="0.1.0",
)

Command = Literal[
    "check", "vg", "jacobi", "skew", "dprops", "assoc",
    "jv", "embed", "perm", "adjoin", "hemi",
]


class RunRequest(BaseModel):
    command: Command
    algebra: Optional[str] = Field(
        default=None, description="name from the built-in corpus (see /api/algebras)"
    )
    document: Optional[dict] = Field(
        default=None, description="inline algebra or Perm document"
    )
    max_degree: int = Field(default=3, ge=1)
    mode_min: int = -2
    mode_max: int = 3
    module: str = "adjoint"
    cross_check: bool = False
    expect_emb: bool = False

    @model_validator(mode="after")
    def _one_input(self):
        if (self.algebra is None) == (self.document is None):
            raise ValueError("provide exactly one of 'algebra' or 'document'")
        if self.mode_min > self.mode_max:
            raise ValueError("mode_min must not exceed mode_max")
        return self


class ReportModel(BaseModel):
    command: str
    params: dict
    passed: bool = Field(alias="pass")
    findings: List[dict]
    graded_dims: Optional[List[int]] = None
    timing: float

    model_config = {"populate_by_name": True}


class RunResponse(BaseModel):
    status: Literal["pass", "fail"]
    reports: List[ReportModel]


class AlgebraInfo(BaseModel):
    name: str
    kind: Literal["leibniz", "perm"]
    dim: int


def _corpus_doc(name: str) -> dict:
    build = catalog.LEIBNIZ_BUILDERS.get(name)
    if build is not None:
        return dump_algebra_doc(build())
    build = catalog.PERM_BUILDERS.get(name)
    if build is not None:
        return dump_perm_doc(build())
    raise HTTPException(status_code=404, detail=f"unknown algebra: {name}")


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok"}


@app.get("/api/algebras", response_model=List[AlgebraInfo])
def algebras() -> List[AlgebraInfo]:
    out = []
    for name, build in catalog.LEIBNIZ_BUILDERS.items():
        out.append(AlgebraInfo(name=name, kind="leibniz", dim=build().dim))
    for name, build in catalog.PERM_BUILDERS.items():
        out.append(AlgebraInfo(name=name, kind="perm", dim=build().dim))
    return out


@app.post("/api/run", response_model=RunResponse, response_model_by_alias=True)
def run_command(req: RunRequest) -> RunResponse:
    if req.document is not None:
        doc, name = req.document, "inline"
    else:
        doc, name = _corpus_doc(req.algebra), req.algebra
    cfg = CommandConfig(
        command=req.command,
        doc=doc,
        doc_name=name,
        max_degree=req.max_degree,
        mode_min=req.mode_min,
        mode_max=req.mode_max,
        module=req.module,
        cross_check=req.cross_check,
        expect_emb=req.expect_emb,
    )
    try:
        outcome = _DISPATCH[req.command](cfg)
    except UsageError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except DegreeOverflow as exc:
        raise HTTPException(
            status_code=422,
            detail=f"window exceeded: need max_degree >= {exc.required}, "
                   f"built {exc.built}",
        ) from exc
    failed = any(counts and not rep.passed for rep, counts in outcome)
    reports = [ReportModel(**rep.to_doc(req.command)) for rep, _ in outcome]
    return RunResponse(status="fail" if failed else "pass", reports=reports)
