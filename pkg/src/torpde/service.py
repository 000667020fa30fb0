"""HTTP service exposing the scenario runner.

Endpoints:
    GET  /health     -> {"status": "ok"}
    GET  /scenarios  -> scenario catalog with descriptions and CSV columns
    POST /run        -> ExperimentConfig JSON in, RunReport JSON out
                        (artifacts are returned inline; clients write files)

Malformed configs fail pydantic validation (422); configs that are
well-formed but invalid for a scenario return 400; numerical aborts
(stability violations, indefinite operators, detected blow-up) return 500
with the diagnostic.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .hyperbolic import InstabilityDetectedError, StabilityError
from .quantize import PositivityError
from .scenarios import ConfigurationError, run_experiment, scenario_catalog
from .schemas import ExperimentConfig, RunReport, ScenarioInfo

NUMERICAL_ABORTS = (StabilityError, InstabilityDetectedError, PositivityError)


def create_app() -> FastAPI:
    app = FastAPI(
        title="torpde",
        description="Toroidal pseudo-differential calculus experiment runner",
        version="0.1.0",
    )

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def scenarios() -> list[ScenarioInfo]:
        return scenario_catalog()

    @app.post("/run", response_model=RunReport)
    def run(config: ExperimentConfig) -> RunReport:
        try:
            return run_experiment(config)
        except ConfigurationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except NUMERICAL_ABORTS as exc:
            raise HTTPException(status_code=500, detail=f"numerical abort: {exc}") from exc

    return app


app = create_app()
