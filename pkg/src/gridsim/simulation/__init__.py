from .engine import (
    ComponentError,
    CsvSink,
    DependencyCycleError,
    ListSink,
    LivelockError,
    MissingDependencyError,
    NoPendingUpdateError,
    SimComponent,
    Simulation,
    SimulationError,
    UnknownPhaseError,
)

__all__ = [
    "SimComponent",
    "Simulation",
    "SimulationError",
    "DependencyCycleError",
    "MissingDependencyError",
    "NoPendingUpdateError",
    "UnknownPhaseError",
    "LivelockError",
    "ComponentError",
    "ListSink",
    "CsvSink",
]
