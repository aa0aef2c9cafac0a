import logging

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

load_dotenv()

from hedger import experiments
from hedger.database import init_db, list_runs
from hedger.errors import HedgerError

logger = logging.getLogger(__name__)

app = FastAPI(title="American Put Hedger")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.on_event("startup")
async def startup_event():
    init_db()


class PriceRequest(BaseModel):
    s0: float = Field(100.0, gt=0)
    strike: float = Field(100.0, gt=0)
    r: float = 0.05
    sigma: float = Field(0.2, gt=0)
    maturity: float = Field(1.0, gt=0)
    tree_steps: int = Field(5000, ge=1, le=20000)
    chebyshev: bool = False
    lsmc: bool = False
    steps: int = Field(100, ge=1)
    seed: int = 0


class BoundaryRequest(BaseModel):
    s0: float = Field(100.0, gt=0)
    strike: float = Field(100.0, gt=0)
    r: float = 0.05
    sigma: float = Field(0.2, gt=0)
    maturity: float = Field(1.0, gt=0)
    tree_steps: int = Field(5000, ge=1, le=20000)
    steps: int = Field(100, ge=2)
    n_s: int = Field(50, ge=2)
    mc_per_node: int = Field(1000, ge=1)
    seed: int = 0


@app.get("/health")
async def health_check():
    return {"status": "ok"}


@app.post("/price")
def price(request: PriceRequest):
    try:
        return experiments.price_summary(
            request.s0, request.strike, request.r, request.sigma, request.maturity, request.tree_steps,
            chebyshev=request.chebyshev, lsmc=request.lsmc, steps=request.steps, seed=request.seed,
        )
    except HedgerError as e:
        logger.warning(f"[API] ⚠ {e}")
        raise HTTPException(status_code=400, detail=str(e))


@app.post("/boundary")
def boundary(request: BoundaryRequest, lo: float = 0.1, hi: float = 0.9):
    try:
        table = experiments.boundary_table(
            request.s0, request.strike, request.r, request.sigma, request.maturity,
            request.tree_steps, request.steps, request.n_s, request.mc_per_node, request.seed,
        )
        gap = experiments.boundary_gap(table, request.maturity, lo, hi)
    except HedgerError as e:
        logger.warning(f"[API] ⚠ {e}")
        raise HTTPException(status_code=400, detail=str(e))
    return {"max_gap": gap, "rows": table.to_dict(orient="records")}


@app.get("/runs")
async def runs(limit: int = 50):
    if limit < 1:
        raise HTTPException(status_code=400, detail="limit must be positive")
    return list_runs(limit)
