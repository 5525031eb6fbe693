"""CSV-driven figure rendering for jointly sparse recovery experiments."""

from .errors import EmptyData, MissingColumn, PlotkitError, UnknownKind
from .figures import KINDS, FigureSpec, render, render_spec

__version__ = "0.1.0"

__all__ = [
    "EmptyData",
    "FigureSpec",
    "KINDS",
    "MissingColumn",
    "PlotkitError",
    "UnknownKind",
    "render",
    "render_spec",
]
