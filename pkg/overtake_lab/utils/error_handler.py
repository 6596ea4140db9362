"""Error handling utilities for batch workers"""

import logging
from collections.abc import Callable
from functools import wraps
from typing import Any, TypeVar, cast

from pydantic import ValidationError

from ..exceptions import OvertakeLabError

T = TypeVar("T")


def handle_errors(
    default_return: Any = None,
    log_level: int = logging.ERROR,
    operation_name: str | None = None,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Log any failure of the wrapped call and return ``default_return`` instead

    Application errors log their details at DEBUG, validation errors their
    error list; anything else is logged with its traceback.
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T:
            op_name = operation_name or func.__name__
            logger = logging.getLogger(func.__module__)
            try:
                return func(*args, **kwargs)
            except OvertakeLabError as e:
                logger.log(log_level, f"Application error in {op_name}: {e}")
                if e.details:
                    logger.debug(f"Error details for {op_name}: {e.details}")
            except ValidationError as e:
                logger.log(log_level, f"Invalid data in {op_name}: {e.error_count()} errors")
                logger.debug(f"Validation errors for {op_name}: {e.errors()}")
            except Exception as e:
                logger.log(log_level, f"Unexpected error in {op_name}: {e}", exc_info=True)
            return cast(T, default_return)

        return wrapper

    return decorator


class ErrorCollector:
    """Failures of independent work items, keyed by their source"""

    def __init__(self) -> None:
        self.errors: list[Exception] = []
        self.sources: list[str | None] = []

    def add_error(self, error: Exception, source: str | None = None) -> None:
        self.errors.append(error)
        self.sources.append(source)

    def has_errors(self) -> bool:
        return bool(self.errors)

    def messages(self) -> list[str]:
        """One line per error, prefixed with its source when known"""
        return [
            f"{source}: {error}" if source else str(error)
            for source, error in zip(self.sources, self.errors, strict=True)
        ]

    def log_all(self, logger: logging.Logger) -> None:
        for error, message in zip(self.errors, self.messages(), strict=True):
            kind = "Application" if isinstance(error, OvertakeLabError) else "Unexpected"
            logger.error(f"{kind} error: {message}")
