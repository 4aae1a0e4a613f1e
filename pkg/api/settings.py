from typing import List, Optional

from pydantic import Field, ValidationInfo, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from domain import DEFAULT_SYMBOLS


class ApiSettings(BaseSettings):
    """Api settings that are set using environment variables (prefix SPOTMATCH_API_)."""

    model_config = SettingsConfigDict(env_prefix="SPOTMATCH_API_")

    title: str = "spotmatch"
    version: str = "1.0"

    # Set to False to disable docs at /docs and /redoc
    docs_enabled: bool = True

    # Alphabet used when a request does not name one
    default_alphabet: str = DEFAULT_SYMBOLS

    # Cors origin list to allow requests from.
    # Localhost is always added by the set_cors_origin_list validator.
    cors_origin_list: Optional[List[str]] = Field(None, validate_default=True)

    @field_validator("cors_origin_list", mode="before")
    def set_cors_origin_list(cls, cors_origin_list, info: ValidationInfo):
        valid_cors = list(cors_origin_list or [])

        # Add localhost to cors to allow requests from the local environment.
        valid_cors.append("http://localhost")
        valid_cors.append("http://localhost:3000")

        return valid_cors


# Create ApiSettings object
api_settings = ApiSettings()
