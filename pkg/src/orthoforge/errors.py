"""Error taxonomy shared by the library and the CLI.

Exit codes: 0 ok, 2 usage, 3 IO, 4 format/schema, 5 degenerate geometry,
6 numeric/domain.
"""


class OrthoforgeError(Exception):
    exit_code = 1
    category = "error"


class UsageError(OrthoforgeError):
    exit_code = 2
    category = "usage"


class IOFailure(OrthoforgeError):
    exit_code = 3
    category = "io"


class ParseError(OrthoforgeError):
    """Malformed file content (bad header, bad magic, truncated body)."""

    exit_code = 4
    category = "format"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(OrthoforgeError):
    """Structurally valid file violating a schema rule (missing property, duplicate id)."""

    exit_code = 4
    category = "schema"


class DegenerateGeometryError(OrthoforgeError):
    exit_code = 5
    category = "geometry"


class NoPlaneError(DegenerateGeometryError):
    """Raised when no plane reaches the minimum consensus; callers should
    consider the perspective fallback."""


class DomainError(OrthoforgeError):
    exit_code = 6
    category = "domain"
