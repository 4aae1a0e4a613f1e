from .config import apply_overrides, load_experiment_config
from .main import app

__all__ = ["app", "apply_overrides", "load_experiment_config"]
