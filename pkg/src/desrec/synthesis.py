"""Controllability checking and supremal supervisor synthesis.

Specifications are state-removal sets: the supervisor is the induced strict
subautomaton of the plant on the surviving states.  ``supcon`` computes the
supremal controllable, nonblocking, safe survivor set by iterating
uncontrollable back-propagation and trimming to a fixpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .automata import (
    Automaton,
    ModelError,
    UnknownStateError,
    empty_automaton,
    induced_subautomaton,
    is_strict_subautomaton,
    reachable_from,
    trim,
)

REASON_SPEC = "unsafe-spec"
REASON_CONTROLLABILITY = "controllability"
REASON_BLOCKING = "blocking"


class NotSubautomatonError(ModelError):
    """The candidate supervisor is not a strict subautomaton of the plant."""


class ControllabilityResult(NamedTuple):
    holds: bool
    witness: tuple[str, str] | None  # (state, uncontrollable event)

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class RemovalRecord:
    """Why a state was deleted during synthesis.

    ``trigger`` is the (event, successor) pair that forced a controllability
    removal; it is ``None`` for spec and blocking removals.
    """

    reason: str
    trigger: tuple[str, str] | None = None


@dataclass(frozen=True)
class SynthesisResult:
    supervisor: Automaton
    removed_states: dict[str, RemovalRecord]
    iterations: int

    @property
    def is_empty(self) -> bool:
        return self.supervisor.is_empty


def _require_strict_subautomaton(candidate: Automaton, parent: Automaton) -> None:
    if not is_strict_subautomaton(candidate, parent):
        raise NotSubautomatonError(
            "expected a strict subautomaton of the plant argument"
        )


def is_controllable(candidate: Automaton, plant: Automaton) -> ControllabilityResult:
    """Check state-based controllability of ``candidate`` w.r.t. ``plant``.

    Holds iff no retained state has an uncontrollable event defined in the
    plant whose transition is missing from the candidate.  On failure the
    witness names the first offending (state, event) in sorted order.
    """
    _require_strict_subautomaton(candidate, plant)
    uncontrollable = plant.alphabet.uncontrollable
    for state in sorted(candidate.states):
        for event in sorted(plant.active_events(state) & uncontrollable):
            if (state, event) not in candidate.transitions:
                return ControllabilityResult(False, (state, event))
    return ControllabilityResult(True, None)


def is_safe_supervisor(
    supervisor: Automaton, plant: Automaton, unsafe: Iterable[str]
) -> bool:
    """True iff the supervisor retains none of the given unsafe states."""
    _require_strict_subautomaton(supervisor, plant)
    return not (supervisor.states & frozenset(unsafe))


def supcon(plant: Automaton, spec_removed: Iterable[str]) -> SynthesisResult:
    """Supremal controllable, nonblocking, safe supervisor of ``plant``.

    Deletes the spec states, then alternates two closures until stable:
    states with an uncontrollable plant transition into a deleted state, and
    states that are unreachable from the initial state or cannot reach a
    marked state within the survivors.  An empty result (initial state
    deleted) is a first-class value, not an error.
    """
    spec_removed = frozenset(spec_removed)
    extra = spec_removed - plant.states
    if extra:
        raise UnknownStateError(f"spec states not in the plant: {sorted(extra)}")
    if plant.initial is None:
        return SynthesisResult(empty_automaton(plant.alphabet), {}, 0)

    removed: dict[str, RemovalRecord] = {
        s: RemovalRecord(REASON_SPEC) for s in spec_removed
    }
    alive = set(plant.states) - spec_removed
    uncontrollable = plant.alphabet.uncontrollable
    iterations = 0

    while True:
        iterations += 1
        changed = False

        # Uncontrollable back-propagation, saturated.
        dirty = True
        while dirty:
            dirty = False
            for state in sorted(alive):
                for event, target in plant.successors(state):
                    if event in uncontrollable and target in removed:
                        removed[state] = RemovalRecord(
                            REASON_CONTROLLABILITY, (event, target)
                        )
                        alive.discard(state)
                        dirty = True
                        changed = True
                        break

        if plant.initial not in alive:
            for s in sorted(alive):
                removed.setdefault(s, RemovalRecord(REASON_BLOCKING))
            return SynthesisResult(
                empty_automaton(plant.alphabet), removed, iterations
            )

        # Trim the induced candidate.
        candidate = induced_subautomaton(plant, alive)
        trimmed = trim(candidate)
        dropped = alive - trimmed.states
        if dropped:
            for s in dropped:
                removed[s] = RemovalRecord(REASON_BLOCKING)
            alive = set(trimmed.states)
            changed = True
            if plant.initial not in alive:
                return SynthesisResult(
                    empty_automaton(plant.alphabet), removed, iterations
                )
            continue

        if not changed:
            return SynthesisResult(candidate, removed, iterations)
