"""Error types for CSV-driven figure rendering."""


class PlotkitError(Exception):
    """Base class for all rendering failures."""


class MissingColumn(PlotkitError, KeyError):
    """A required named column is absent from an input CSV."""

    def __init__(self, path, missing, present):
        self.path = str(path)
        self.missing = list(missing)
        self.present = list(present)
        cols = ", ".join(self.missing)
        super().__init__(
            f"{self.path}: missing required column(s) {cols}; "
            f"found columns: {', '.join(self.present) or '(none)'}"
        )

    def __str__(self):
        # KeyError would repr-quote the message otherwise
        return self.args[0]


class EmptyData(PlotkitError, ValueError):
    """An input CSV holds no data rows, or no inputs were given."""


class UnknownKind(PlotkitError, ValueError):
    """The requested figure kind is not one of the supported kinds."""
