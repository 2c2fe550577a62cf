"""Exception types with module-qualified error codes."""

from __future__ import annotations


class OctopshError(Exception):
    """Base error. ``code`` is a dotted ``module.reason`` identifier."""

    def __init__(self, code: str, message: str):
        super().__init__(f"[{code}] {message}")
        self.code = code


class DomainError(OctopshError, ValueError):
    """Input outside the region where an operation is defined."""


class ContractError(OctopshError):
    """A declared precondition on user-supplied data does not hold."""
