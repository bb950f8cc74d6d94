from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import os

from marginalflow import __version__
from marginalflow.api.routes import router
from marginalflow.config import settings
from marginalflow.models.jobs import JobKind


# CREATE, UPLOAD AND OUTPUT DIRECTORIES
os.makedirs(settings.upload_dir, exist_ok=True)
os.makedirs(settings.output_dir, exist_ok=True)

app = FastAPI(
    title = "Marginal Flow Laboratory",
    description = (
        "Batch numerical checks of quasipinning stability for fermionic and qubit systems: "
        "Monte-Carlo sampling of natural occupations against generalized Pauli constraints, "
        "the Borland-Dennis determinant expansion, and facet-restricted variational energies. "
        "Upload a constraint file, start a job, poll its status and download the result table."
    ),
    version = __version__
)

# CONFIGURE CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
    allow_credentials=True,
)

#INCLUDE ROUTERS
app.include_router(router, prefix="/api/v1")

@app.get("/")
async def root():
    return {
        "message": "Marginal Flow Laboratory: quasipinning and stabilizing-flow experiments over HTTP.",
        "version": __version__,
        "experiments": [kind.value for kind in JobKind],
        "endpoints": {
            "upload_constraints": "/api/v1/constraints/upload",
            "start": "/api/v1/experiments/{kind}",
            "status": "/api/v1/status/{task_id}",
            "download": "/api/v1/download/{filename}",
        },
        "defaults": {"gap_tol": settings.gap_tol, "tol": settings.tol, "t_max": settings.t_max},
        "docs": "/docs"
    }

@app.get("/health")
async def health_check():
    return {"status": "healthy", "version": __version__}
