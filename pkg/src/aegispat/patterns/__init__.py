"""Architectural safety patterns assembled from dataflow components."""

from .blocks import (
    IN_TRANSIT,
    PRIMARY,
    ConsistencyCheck,
    Demux,
    Gate,
    Mux,
    PassThrough,
    SafetyPostprocess,
    Switch,
    ValueOverride,
    Voter,
    clamp_fn,
    effective_threshold,
    majority,
    median_vote,
)
from .builders import (
    DecisionTable,
    IncompatibleMonitorMode,
    IncompleteDecisionTable,
    PartitionGap,
    PartitionOverlap,
    PatternError,
    PatternInstance,
    PatternKind,
    check_partitions,
    make_active_monitor,
    make_backup_parallel,
    make_combined,
    make_function_modification,
    make_input_partitioning,
    make_rta,
    make_rta_ensemble,
    make_single_channel,
    make_tmr,
    make_value_override,
)
from .catalogue import CATALOGUE, CatalogueEntry, describe
from .monitors import (
    MonitorComponent,
    MonitorMode,
    MonitorSpec,
    MonitorSpecError,
    Verdict,
    eval_monitor,
    monitor_component,
    monitor_from_dict,
    ood_envelope_from_samples,
    tripped,
)

__all__ = [name for name in dir() if not name.startswith("_")]
