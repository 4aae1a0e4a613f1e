from fastapi import APIRouter

from api.settings import api_settings
from evalkit import EvalTask
from spotcost import MatchMode

######################################################
## Routes for the API Health
######################################################

health_router = APIRouter(tags=["Health"])


@health_router.get("/health")
def get_health():
    """Liveness plus what the service can do: matching modes, evaluation tasks and the default alphabet."""

    return {
        "status": "success",
        "service": api_settings.title,
        "version": api_settings.version,
        "match_modes": [mode.value for mode in MatchMode],
        "eval_tasks": [task.value for task in EvalTask],
        "default_alphabet": api_settings.default_alphabet,
    }
