"""Error types shared across the library, the HTTP service and the CLI.

Every error carries a stable machine-readable ``key`` (asserted by tests,
mapped to UI text) plus a human-readable message. ``field_path`` points at
the offending field for payload errors, e.g. ``"trajectory.samples[3].f"``.
"""

from __future__ import annotations


class ShadowOptError(Exception):
    """Base class; ``code`` is the coarse category used on the wire."""

    code = "internal_error"

    def __init__(self, key: str, message: str, field_path: str | None = None):
        super().__init__(message)
        self.key = key
        self.message = message
        self.field_path = field_path

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "key": self.key,
            "message": self.message,
            "field_path": self.field_path,
        }


class ValidationError(ShadowOptError):
    """Malformed or out-of-contract input (HTTP 400)."""

    code = "validation_error"


class ParseError(ValidationError):
    """Structurally broken document; ``field_path`` names the bad field."""

    code = "parse_error"


class DomainRuleError(ShadowOptError):
    """Input is well-formed but violates a domain rule (HTTP 422)."""

    code = "domain_rule_violation"


class NotFoundError(ShadowOptError):
    """Unknown entity id (HTTP 404)."""

    code = "not_found"

    def __init__(self, kind: str, entity_id: str):
        super().__init__(f"{kind}.not_found", f"no {kind} with id {entity_id!r}")
        self.kind = kind
        self.entity_id = entity_id


class ConflictError(ShadowOptError):
    """Illegal state transition or busy entity (HTTP 409)."""

    code = "conflict"
