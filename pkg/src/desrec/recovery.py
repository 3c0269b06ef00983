"""Robust-region validation, resilient-supervisor synthesis, and recovery
strategies.

Recoverability is decided two independent ways and cross-checked:

* synthesis route: remove vulnerable/unsafe post-attack states from the
  attacked closed loop, re-mark post-attack region states, run ``supcon``,
  and check that every detection state survives;
* game route: compute the largest set of safe post-attack states that is
  closed under uncontrollable transitions and from which the region is
  reachable without leaving the set.  A state admits a recovery strategy
  (a path into the region whose every uncontrollable divergence admits one
  again, recursively) exactly when it belongs to that set.
"""

from __future__ import annotations

import heapq
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .automata import (
    Automaton,
    ModelError,
    UnknownStateError,
    induced_subautomaton,
    reachable_from,
)
from .attacks import AttackedSystem, vulnerable_states, verify_ae_safe_controllability
from .synthesis import RemovalRecord, SynthesisResult, supcon


class RegionValidationError(ModelError):
    """The proposed region violates the robust-region conditions."""

    def __init__(self, message: str, *, vulnerable=(), unsafe=(), unreachable=()):
        super().__init__(message)
        self.vulnerable = tuple(sorted(vulnerable))
        self.unsafe = tuple(sorted(unsafe))
        self.unreachable = tuple(sorted(unreachable))


class NotRecoverableError(ModelError):
    pass


@dataclass(frozen=True)
class RobustRegion:
    """A validated plant-state subset free of vulnerable and unsafe states."""

    region_states: frozenset[str]
    induced: Automaton


@dataclass(frozen=True)
class RecoveryStrategy:
    """A concrete recovery plan from one detection state.

    ``nominal_path`` leads from ``start`` into the region.  ``contingency``
    maps (state on or reached from the plan, uncontrollable divergence event)
    to the continuation path from the diverted-to state; it is closed under
    its own divergences.
    """

    start: str
    nominal_path: tuple[str, ...]
    contingency: dict[tuple[str, str], tuple[str, ...]]

    def edges(self, arena: Automaton) -> frozenset[tuple[str, str]]:
        """All (state, event) steps the strategy may traverse in ``arena``."""
        out: set[tuple[str, str]] = set()
        paths = [(self.start, self.nominal_path)]
        for (state, event), continuation in self.contingency.items():
            out.add((state, event))
            paths.append((arena.transitions[(state, event)], continuation))
        for origin, path in paths:
            cursor = origin
            for event in path:
                out.add((cursor, event))
                cursor = arena.transitions[(cursor, event)]
        return frozenset(out)


@dataclass(frozen=True)
class RecoveryCounterexample:
    """Why a detection state admits no recovery strategy.

    ``chain`` walks removal records from the detection state to a root cause
    (a vulnerable/unsafe or blocking removal).
    """

    detection_state: str
    chain: tuple[tuple[str, RemovalRecord], ...]


@dataclass(frozen=True)
class RecoveryVerdict:
    recoverable: bool
    per_detection: dict[str, RecoveryStrategy | RecoveryCounterexample]
    resilient_supervisor: SynthesisResult
    winning_set: frozenset[str]
    method_agreement: bool
    counterexample: RecoveryCounterexample | None = None


def validate_robust_region(
    plant: Automaton, region_states: Iterable[str]
) -> RobustRegion:
    """Check the robust-region conditions and build the induced subautomaton.

    Hard errors: empty region, states outside the plant, vulnerable or unsafe
    states inside, and (when the plant's initial state belongs to the region)
    region states unreachable within the induced subautomaton.  A region that
    does not contain the initial state is accepted with a liveness warning.
    """
    region = frozenset(region_states)
    if not region:
        raise RegionValidationError("region must be nonempty")
    extra = region - plant.states
    if extra:
        raise UnknownStateError(f"region states not in the plant: {sorted(extra)}")

    bad_vulnerable = region & vulnerable_states(plant)
    bad_unsafe = region & plant.unsafe
    induced = induced_subautomaton(plant, region)
    bad_unreachable: frozenset[str] = frozenset()
    if plant.initial in region:
        inside = reachable_from(induced, {plant.initial}, induced.alphabet.events)
        bad_unreachable = region - inside
    else:
        warnings.warn(
            "region does not contain the plant's initial state; "
            "internal reachability is not checked",
            stacklevel=2,
        )
    if bad_vulnerable or bad_unsafe or bad_unreachable:
        parts = []
        if bad_vulnerable:
            parts.append(f"vulnerable: {sorted(bad_vulnerable)}")
        if bad_unsafe:
            parts.append(f"unsafe: {sorted(bad_unsafe)}")
        if bad_unreachable:
            parts.append(f"unreachable-in-induced: {sorted(bad_unreachable)}")
        raise RegionValidationError(
            "invalid robust region (" + "; ".join(parts) + ")",
            vulnerable=bad_vulnerable,
            unsafe=bad_unsafe,
            unreachable=bad_unreachable,
        )
    return RobustRegion(region_states=region, induced=induced)


def build_resilient_spec(
    system: AttackedSystem, region: RobustRegion
) -> tuple[frozenset[str], Automaton]:
    """Removal set and re-marked closed loop for resilient synthesis.

    Every post-attack state whose plant component is vulnerable or unsafe is
    scheduled for removal.  Marking keeps the nominal marks on pre-attack
    states and marks exactly the region components after an attack, so
    nonblocking synthesis forces recovery into the region.
    """
    bad = system.vulnerable_plant_states | system.unsafe_plant_states
    gr = system.gr
    spec_removed = frozenset(
        s
        for s in gr.states
        if system.is_post_attack(s) and system.plant_component[s] in bad
    )
    marked = frozenset(
        s
        for s in gr.states
        if (
            system.plant_component[s] in region.region_states
            if system.is_post_attack(s)
            else s in gr.marked
        )
    )
    remarked = Automaton(
        states=gr.states,
        alphabet=gr.alphabet,
        transitions=gr.transitions,
        initial=gr.initial,
        marked=marked,
        unsafe=gr.unsafe,
    )
    return spec_removed, remarked


def recoverability_game_oracle(
    system: AttackedSystem, region: RobustRegion
) -> frozenset[str]:
    """States of the attacked loop from which a recovery strategy exists.

    Computed as the greatest fixpoint: start from all post-attack states with
    neither vulnerable nor unsafe plant components, then repeatedly drop
    states that have an uncontrollable transition leaving the set or that
    cannot reach a region component while staying inside the set.  Both a
    path into the region and closure under uncontrollable divergences are
    exactly what a recovery strategy needs, so membership is equivalent to
    strategy existence.
    """
    gr = system.gr
    bad = system.vulnerable_plant_states | system.unsafe_plant_states
    candidates = {
        s
        for s in gr.states
        if system.is_post_attack(s) and system.plant_component[s] not in bad
    }
    uncontrollable = gr.alphabet.uncontrollable

    current = set(candidates)
    while True:
        # Closure under uncontrollable transitions.
        stable = {
            s
            for s in current
            if all(
                target in current
                for event, target in gr.successors(s)
                if event in uncontrollable
            )
        }
        # Internal reachability of the region.
        targets = {
            s for s in stable if system.plant_component[s] in region.region_states
        }
        reverse: dict[str, set[str]] = {s: set() for s in stable}
        for s in stable:
            for _event, target in gr.successors(s):
                if target in stable and target != s:
                    reverse[target].add(s)
        keep = set(targets)
        queue = deque(targets)
        while queue:
            state = queue.popleft()
            for pred in reverse[state]:
                if pred not in keep:
                    keep.add(pred)
                    queue.append(pred)
        if keep == current:
            return frozenset(keep)
        current = keep


def _shortest_paths_into_region(
    arena: Automaton, targets: frozenset[str]
) -> dict[str, tuple[str, ...]]:
    """Shortest event path from every arena state into ``targets``.

    Ties are broken lexicographically on the event sequence.  Implemented as
    a Dijkstra-style search on (length, path) keys, which stays cheap at the
    sizes the closed loops reach here.
    """
    best: dict[str, tuple[str, ...]] = {}
    heap: list[tuple[int, tuple[str, ...], str]] = [(0, (), s) for s in sorted(targets)]
    heapq.heapify(heap)
    # Search backwards: build reverse adjacency once.
    reverse: dict[str, list[tuple[str, str]]] = {s: [] for s in arena.states}
    for (src, event), dst in arena.transitions.items():
        reverse[dst].append((event, src))
    for lst in reverse.values():
        lst.sort()
    while heap:
        length, path, state = heapq.heappop(heap)
        if state in best:
            continue
        best[state] = path
        for event, pred in reverse[state]:
            if pred not in best:
                heapq.heappush(heap, (length + 1, (event,) + path, pred))
    return best


def extract_recovery_strategy(
    system: AttackedSystem,
    arena: Automaton,
    region: RobustRegion,
    detection_state: str,
) -> RecoveryStrategy:
    """Concrete recovery plan for one detection state inside ``arena``.

    ``arena`` is the surviving resilient supervisor (or the winning set's
    induced subautomaton).  The nominal path is the shortest path into a
    region component, ties broken lexicographically; the contingency map is
    closed under every uncontrollable divergence reachable while replaying.
    """
    if detection_state not in arena.states:
        raise NotRecoverableError(
            f"detection state {detection_state!r} admits no recovery strategy"
        )
    targets = frozenset(
        s
        for s in arena.states
        if system.is_post_attack(s)
        and system.plant_component[s] in region.region_states
    )
    paths = _shortest_paths_into_region(arena, targets)
    if detection_state not in paths:
        raise NotRecoverableError(
            f"no path from {detection_state!r} into the region"
        )
    uncontrollable = arena.alphabet.uncontrollable
    contingency: dict[tuple[str, str], tuple[str, ...]] = {}
    pending = deque([detection_state])
    planned: set[str] = set()
    while pending:
        origin = pending.popleft()
        if origin in planned:
            continue
        planned.add(origin)
        path = paths[origin]
        cursor = origin
        for index in range(len(path) + 1):
            nominal_next = path[index] if index < len(path) else None
            for event in sorted(arena.active_events(cursor) & uncontrollable):
                if event == nominal_next:
                    continue
                diverted = arena.transitions[(cursor, event)]
                if diverted not in paths:
                    raise NotRecoverableError(
                        f"uncontrollable divergence {event!r} at {cursor!r} "
                        "escapes every recovery plan"
                    )
                contingency[(cursor, event)] = paths[diverted]
                pending.append(diverted)
            if nominal_next is not None:
                cursor = arena.transitions[(cursor, nominal_next)]
    return RecoveryStrategy(
        start=detection_state,
        nominal_path=paths[detection_state],
        contingency=contingency,
    )


def _removal_chain(
    removed: Mapping[str, RemovalRecord], state: str
) -> tuple[tuple[str, RemovalRecord], ...]:
    chain: list[tuple[str, RemovalRecord]] = []
    cursor = state
    seen: set[str] = set()
    while cursor in removed and cursor not in seen:
        seen.add(cursor)
        record = removed[cursor]
        chain.append((cursor, record))
        if record.trigger is None:
            break
        cursor = record.trigger[1]
    return tuple(chain)


def synthesize_resilient_supervisor(
    system: AttackedSystem, region: RobustRegion
) -> RecoveryVerdict:
    """Solve verification and synthesis in one pass.

    Runs ``supcon`` on the re-marked attacked loop; the system is recoverable
    iff every detection state survives.  The independent game oracle is
    always computed and its verdict recorded in ``method_agreement``.
    Strategies are extracted from the survivor for recoverable detection
    states; the others carry removal-chain counterexamples.
    """
    if not verify_ae_safe_controllability(system):
        warnings.warn(
            "system is not AE-safe controllable; synthesis proceeds anyway",
            stacklevel=2,
        )
    spec_removed, remarked = build_resilient_spec(system, region)
    synthesis = supcon(remarked, spec_removed)
    survivors = synthesis.supervisor.states
    recoverable = system.detection_states <= survivors

    winning = recoverability_game_oracle(system, region)
    game_recoverable = system.detection_states <= winning
    agreement = recoverable == game_recoverable

    per_detection: dict[str, RecoveryStrategy | RecoveryCounterexample] = {}
    counterexamples: list[tuple[int, str, RecoveryCounterexample]] = []
    for state in sorted(system.detection_states):
        if state in survivors:
            per_detection[state] = extract_recovery_strategy(
                system, synthesis.supervisor, region, state
            )
        else:
            chain = _removal_chain(synthesis.removed_states, state)
            example = RecoveryCounterexample(detection_state=state, chain=chain)
            per_detection[state] = example
            counterexamples.append((len(chain), state, example))
    headline = min(counterexamples)[2] if counterexamples else None

    return RecoveryVerdict(
        recoverable=recoverable,
        per_detection=per_detection,
        resilient_supervisor=synthesis,
        winning_set=winning,
        method_agreement=agreement,
        counterexample=headline,
    )
