"""FastAPI application implementing the predict-state protocol.

Endpoints (bit-exact wire contract of the pipeline's HTTP backend):
  POST /v1/predict_state  {"dialogue_id": str, "turn_index": int, "context": str}
                          -> 200 {"state": str}
  GET  /v1/health         -> 200 {"status": "ok"}
Malformed bodies get 400 with a diagnostic; unknown paths 404; wrong methods
405. Handlers are stateless: everything the predictor needs arrives in the
request, so identical requests always produce identical responses.
"""

from __future__ import annotations

from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .mockdst import MockDst
from .ontology import load_ontology

Predictor = Callable[[str], str]


class PredictStateRequest(BaseModel):
    dialogue_id: str
    turn_index: int
    context: str


def create_app(ontology_path: str | None = None, predictor: Predictor | None = None) -> FastAPI:
    """Build the server app.

    Mock mode loads the ontology and answers with the deterministic mock
    predictor. Passing ``predictor`` instead plugs in an external model
    (anything mapping a context string to a linearized state string) - this
    is the extension hook for real ASR/DST stacks.
    """
    if predictor is None:
        if ontology_path is None:
            raise ValueError("mock mode requires an ontology path")
        predictor = MockDst(load_ontology(ontology_path)).predict

    app = FastAPI(title="dst-mock-server", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.post("/v1/predict_state")
    def predict_state(request: PredictStateRequest) -> dict:
        return {"state": predictor(request.context)}

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    return app
