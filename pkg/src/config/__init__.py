from .config_manager import (
    ConfigManager,
    DataQuality,
    EnsembleSection,
    ExperimentConfig,
    LoggingConfig,
    Method,
    ObservationConfig,
    OutlierSchedule,
    SolverConfig,
)

__all__ = [
    "ConfigManager",
    "DataQuality",
    "EnsembleSection",
    "ExperimentConfig",
    "LoggingConfig",
    "Method",
    "ObservationConfig",
    "OutlierSchedule",
    "SolverConfig",
]
