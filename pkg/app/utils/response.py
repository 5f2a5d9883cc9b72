import math
from typing import Any, Optional

from fastapi import HTTPException, status

from app.core.errors import CoefficientValidationError, PeerError
from app.core.logger import logger


def create_response(status_code: int, message: str, data: Optional[Any] = None) -> dict:
    """
    Create a standardized response dictionary.

    Args:
        status_code (int): HTTP status code mirrored into the body.
        message (str): A message describing the response.
        data (optional): Payload; non-finite floats are replaced by None.

    Returns:
        dict: A dictionary containing the response.
    """
    response = {
        "status": status_code,
        "message": message,
    }
    if data is not None:
        response["data"] = finite_or_none(data)
    return response


def finite_or_none(data: Any) -> Any:
    """JSON has no NaN or infinity; map them to null."""
    if isinstance(data, float):
        return data if math.isfinite(data) else None
    if isinstance(data, dict):
        return {key: finite_or_none(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [finite_or_none(value) for value in data]
    return data


def raise_http_error(error: Exception, action: str):
    """Translate an exception into an HTTPException carrying the response envelope."""
    if isinstance(error, CoefficientValidationError):
        logger.warning("Failed to %s: %s", action, error)
        code = 422
        detail = create_response(code, str(error), data=error.report.model_dump())
    elif isinstance(error, PeerError):
        logger.warning("Failed to %s: %s", action, error)
        code = status.HTTP_400_BAD_REQUEST
        detail = create_response(code, str(error))
    else:
        logger.error("Unexpected error while trying to %s: %s", action, error)
        code = status.HTTP_500_INTERNAL_SERVER_ERROR
        detail = create_response(code, "Internal server error")
    raise HTTPException(status_code=code, detail=detail)
