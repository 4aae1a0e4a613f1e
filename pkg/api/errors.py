from fastapi import HTTPException, status

from utils.errors import ArgumentError, ParseError, SpotError, ValidationError


def as_http_error(error: SpotError) -> HTTPException:
    """ValidationError/ParseError -> 422, ArgumentError (capacity included) -> 400, anything else -> 500."""
    if isinstance(error, (ValidationError, ParseError)):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(error))
    if isinstance(error, ArgumentError):
        return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(error))
    return HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(error))
