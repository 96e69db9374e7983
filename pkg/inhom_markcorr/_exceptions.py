from typing import Any, Dict, List, Optional


class MarkCorrError(Exception):
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class WindowError(MarkCorrError):
    pass


class UndefinedOverlapError(WindowError):
    pass


class PatternError(MarkCorrError):
    pass


class PatternParseError(PatternError):
    def __init__(self, message: str, row: Optional[int] = None, details: Dict[str, Any] = None):
        super().__init__(message, {**(details or {}), "row": row})
        self.row = row


class OutOfWindowError(PatternError):
    def __init__(self, message: str, rows: List[int], details: Dict[str, Any] = None):
        super().__init__(message, {**(details or {}), "rows": rows})
        self.rows = rows


class NonFiniteMarkError(PatternError):
    def __init__(self, message: str, rows: List[int], details: Dict[str, Any] = None):
        super().__init__(message, {**(details or {}), "rows": rows})
        self.rows = rows


class InsufficientPointsError(PatternError):
    pass


class EstimationError(MarkCorrError):
    pass


class ZeroNormalizerError(EstimationError):
    pass


class AllMissingError(EstimationError):
    pass


class DegenerateBandwidthError(EstimationError):
    pass


class SimulationError(MarkCorrError):
    pass


class UnknownPresetError(SimulationError):
    pass


class UnboundedIntensityError(SimulationError):
    pass


class NonPositiveDefiniteError(SimulationError):
    pass


class ConfigError(MarkCorrError):
    pass


class OutputError(MarkCorrError):
    pass
