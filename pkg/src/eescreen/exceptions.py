"""Exception hierarchy for eescreen."""


class EEScreenError(Exception):
    """Base class for all package errors."""


class InvalidGridError(EEScreenError, ValueError):
    """A level count that breaks the equiprobable grid (odd p > 2, p < 2)."""


class RangeError(EEScreenError, ValueError):
    pass


class InvalidDesignError(EEScreenError, ValueError):
    pass


class IncompleteEvaluationError(EEScreenError):
    """Outputs are missing for one or more design points."""

    def __init__(self, point_ids, message=None):
        self.point_ids = sorted(set(point_ids))
        if message is None:
            shown = ", ".join(str(p) for p in self.point_ids[:20])
            more = "" if len(self.point_ids) <= 20 else f" (+{len(self.point_ids) - 20} more)"
            message = f"missing outputs for point ids: {shown}{more}"
        super().__init__(message)


class EmptyGroupError(EEScreenError, ValueError):
    pass


class TransformDomainError(EEScreenError, ValueError):
    """A transform is undefined at one or more evaluation points."""

    def __init__(self, failures):
        # failures: list of (point_id, reason)
        self.failures = list(failures)
        lines = [f"point {pid}: {why}" for pid, why in self.failures[:20]]
        if len(self.failures) > 20:
            lines.append(f"... {len(self.failures) - 20} more")
        super().__init__("transform domain error\n  " + "\n  ".join(lines))


class ClassificationError(EEScreenError, ValueError):
    pass


class ConfigError(EEScreenError, ValueError):
    """Config schema violation, located by JSON path (and line when known)."""

    def __init__(self, path, message, line=None):
        self.path = path
        self.line = line
        where = path or "<root>"
        if line is not None:
            where = f"line {line}: {where}"
        super().__init__(f"{where}: {message}")


class StalePlanError(EEScreenError):
    """Plan (or ledger) was generated from a different configuration."""
