from fastapi import APIRouter

from app.routers.methods import router as methods_router
from app.routers.runs import router as runs_router

api_router = APIRouter()

api_router.include_router(methods_router, prefix="/methods", tags=["Methods"])
api_router.include_router(runs_router, prefix="/runs", tags=["Runs"])
