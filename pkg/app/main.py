from fastapi import FastAPI

from app.core.config import settings

# routers
from app.api.queries import router as queries_router

app = FastAPI(title="cde", version=settings.app_version)

app.include_router(queries_router, prefix="/queries", tags=["queries"])


@app.get("/health")
def health():
    return {"status": "ok", "version": settings.app_version}
