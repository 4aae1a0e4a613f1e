from fastapi import APIRouter

from api.routes.evaluation import evaluation_router
from api.routes.health import health_router
from api.routes.matching import matching_router

v1_router = APIRouter(prefix="/v1")
v1_router.include_router(health_router)
v1_router.include_router(matching_router)
v1_router.include_router(evaluation_router)
