"""Human-readable summary of each pattern kind, for documentation and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .builders import PatternKind


@dataclass(frozen=True)
class CatalogueEntry:
    kind: str
    summary: str
    roles: tuple[str, ...]
    options: tuple[str, ...]
    detects: tuple[str, ...]
    weaknesses: tuple[str, ...]
    builder: str

    def to_dict(self) -> dict:
        return asdict(self)


CATALOGUE: dict[str, CatalogueEntry] = {
    e.kind: e
    for e in (
        CatalogueEntry(
            kind="single_channel",
            summary="The complex function alone; the baseline every other pattern is compared against.",
            roles=("complex",),
            options=(),
            detects=(),
            weaknesses=("every erroneous output reaches the consumer",),
            builder="make_single_channel",
        ),
        CatalogueEntry(
            kind="active_monitor",
            summary="An input-side monitor disconnects (or flags) the complex output when its check fails.",
            roles=("complex", "monitor", "switch"),
            options=("action: disconnect | flag_invalid", "monitor mode: input_range | odd_conformance | ood_envelope"),
            detects=("inputs outside the checked range or operating domain",),
            weaknesses=(
                "erroneous outputs computed from in-domain inputs are missed",
                "a trip costs availability: no alternative output is provided",
            ),
            builder="make_active_monitor",
        ),
        CatalogueEntry(
            kind="backup_parallel",
            summary="A conventional backup runs in parallel; the switch engages it when the complex channel "
            "reports its own failure (absence or invalid flag).",
            roles=("complex", "backup", "switch"),
            options=("p_selftest: self-test coverage of erroneous outputs", "latency", "hold_down"),
            detects=("omissions", "failures caught by the complex channel's self-test"),
            weaknesses=("erroneous outputs that still look valid pass straight through",),
            builder="make_backup_parallel",
        ),
        CatalogueEntry(
            kind="combined",
            summary="Active monitor plus backup: a monitor verdict drives the switch to the backup.",
            roles=("complex", "monitor", "backup", "switch"),
            options=(
                "variant: input_monitor | output_monitor | independent_channel",
                "latency",
                "hold_down",
            ),
            detects=(
                "input_monitor: out-of-range / out-of-domain inputs",
                "output_monitor: implausible, stale or reference-violating outputs",
                "independent_channel: domain departures seen by separate sensing",
            ),
            weaknesses=(
                "input_monitor misses in-domain erroneous outputs",
                "output_monitor misses corrupted inputs that the complex function maps consistently",
                "independent_channel misses everything its own sensing does not observe",
            ),
            builder="make_combined",
        ),
        CatalogueEntry(
            kind="rta",
            summary="Runtime assurance: assured monitors, a decision table over their verdicts, and one or "
            "more assured alternatives; optionally wraps an ensemble of models with a consistency check.",
            roles=("complex", "monitor", "switch", "alternative", "preprocess", "postprocess", "voter"),
            options=(
                "boundary: ml_only | with_prepost | monitor_inside",
                "decision table over all monitor-verdict combinations",
                "input_assurance stage",
                "ensemble: combiner mean | median | vote, spread threshold",
                "latency",
                "hold_down",
            ),
            detects=("whatever the configured monitors observe",),
            weaknesses=(
                "coverage is only as good as the monitors",
                "placing monitors inside the complex boundary voids their independence",
            ),
            builder="make_rta / make_rta_ensemble",
        ),
        CatalogueEntry(
            kind="value_override",
            summary="Outputs whose reported uncertainty exceeds a threshold are replaced by a safe "
            "worst-case value; the threshold may adapt to a risk signal.",
            roles=("complex", "switch"),
            options=(
                "mode: point | distribution",
                "threshold",
                "adaptive: ordered (risk label, threshold) levels",
                "direction: lower | upper safe quantile",
            ),
            detects=("low-confidence outputs",),
            weaknesses=("confidently wrong outputs are not overridden",),
            builder="make_value_override",
        ),
        CatalogueEntry(
            kind="function_modification",
            summary="A safety post-processing step enlarges detected boxes so that any true box within the "
            "training IoU bound is covered.",
            roles=("complex", "postprocess"),
            options=("training_iou",),
            detects=(),
            weaknesses=(
                "only as good as the IoU bound; detections below it can still miss the object",
                "false negatives are untouched",
            ),
            builder="make_function_modification",
        ),
        CatalogueEntry(
            kind="input_partitioning",
            summary="A selector routes each input to the channel owning its partition of the declared input "
            "space; partitions must tile that space exactly.",
            roles=("selector", "complex", "alternative"),
            options=("partitions per channel", "selector declaring the input space"),
            detects=("inputs outside the declared space (they produce no output)",),
            weaknesses=("a faulty channel is not masked inside its own partition",),
            builder="make_input_partitioning",
        ),
        CatalogueEntry(
            kind="tmr",
            summary="Three replicas and a voter; any single faulty replica is masked.",
            roles=("complex", "voter"),
            options=("voter: majority_exact | median",),
            detects=("disagreement of one replica with the other two",),
            weaknesses=("common-mode faults hit all replicas alike", "no relief in assurance level"),
            builder="make_tmr",
        ),
    )
}

assert set(CATALOGUE) == {k.value for k in PatternKind}


def describe(kind: str) -> CatalogueEntry:
    try:
        return CATALOGUE[PatternKind(kind).value]
    except ValueError:
        raise KeyError(f"unknown pattern kind {kind!r}; known: {', '.join(sorted(CATALOGUE))}") from None
