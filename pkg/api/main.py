from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from loguru import logger
from starlette.middleware.cors import CORSMiddleware

from api.errors import as_http_error
from api.routes.v1_router import v1_router
from api.settings import api_settings
from utils.errors import SpotError
from utils.log import configure_logging


async def spot_error_handler(request: Request, exc: Exception) -> JSONResponse:
    """Errors escaping a route get the same status mapping the routes use."""
    http_error = as_http_error(exc)  # type: ignore[arg-type]
    logger.warning(f"{request.method} {request.url.path}: {exc}")
    return JSONResponse(status_code=http_error.status_code, content={"detail": http_error.detail})


def create_app() -> FastAPI:
    """Create the spotmatch FastAPI App"""

    configure_logging()

    app: FastAPI = FastAPI(
        title=api_settings.title,
        version=api_settings.version,
        description="Text Hungarian matching, loss and evaluation over HTTP.",
        docs_url="/docs" if api_settings.docs_enabled else None,
        redoc_url="/redoc" if api_settings.docs_enabled else None,
        openapi_url="/openapi.json" if api_settings.docs_enabled else None,
    )

    # Add v1 router
    app.include_router(v1_router)
    app.add_exception_handler(SpotError, spot_error_handler)

    # Add Middlewares
    app.add_middleware(
        CORSMiddleware,
        allow_origins=api_settings.cors_origin_list,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    return app


# Create a FastAPI app
app = create_app()
