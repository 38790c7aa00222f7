"""Exception hierarchy.

The CLI maps these onto exit codes: ``InputError`` -> 1,
``GeometryError`` -> 2, ``IllConditionedError`` -> 3.
"""


class QuasirigidError(Exception):
    exit_code = 2


class InputError(QuasirigidError, ValueError):
    """Malformed document, bad parameters or missing data."""

    exit_code = 1


class InvalidSpecError(InputError):
    pass


class GeometryError(QuasirigidError):
    """A geometric or combinatorial invariant does not hold."""

    exit_code = 2


class IrregularMultigridError(GeometryError):
    pass


class OnLineError(GeometryError):
    """A sample point lies on a grid line, so its band index is ambiguous."""

    def __init__(self, grid: int, line: int, message: str | None = None):
        self.grid = grid
        self.line = line
        super().__init__(message or f"point lies on line {line} of grid {grid}")


class InvalidTileError(GeometryError):
    def __init__(self, tile: int, message: str):
        self.tile = tile
        super().__init__(f"tile {tile}: {message}")


class ClosureEscapeError(GeometryError):
    pass


class StructureError(GeometryError):
    """A ribbon fails to separate the patch, or a patch is not simply connected."""


class ExpansionError(GeometryError):
    pass


class IllConditionedError(QuasirigidError):
    """The singular spectrum has no clear gap at the rank threshold."""

    exit_code = 3
