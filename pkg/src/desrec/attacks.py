"""Actuator-enablement attack modeling.

Builds the attacked plant (parallel ``#a`` copies of vulnerable transitions),
the attacked supervisor (an absorbing attack state reached whenever a
disabled vulnerable event is forced), their closed-loop composition with
detection bookkeeping, and the safe-controllability check that damage can
always be averted after detection by disabling non-vulnerable controllable
events.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .automata import (
    ATTACK_SUFFIX,
    Automaton,
    EventAlphabet,
    ModelError,
    ReservedNameError,
    parallel_compose_components,
)
from .synthesis import NotSubautomatonError
from .automata import is_strict_subautomaton

# Reserved supervisor-component identity for post-attack states.  The plain
# name "A" is avoided because plant models may legitimately use it.
ATTACK_STATE = "@ATT"


class UnsafeSupervisorError(ModelError):
    """The supervisor retains unsafe plant states."""


def attack_event(event: str) -> str:
    return event + ATTACK_SUFFIX


def vulnerable_states(plant: Automaton) -> frozenset[str]:
    """States where some vulnerable event is feasible."""
    vulnerable = plant.alphabet.vulnerable
    if not vulnerable:
        return frozenset()
    return frozenset(
        s for s in plant.states if plant.active_events(s) & vulnerable
    )


def build_attacked_plant(plant: Automaton) -> Automaton:
    """Add a parallel ``#a`` transition for every vulnerable transition.

    The alphabet is extended with the uncontrollable attack copies; states
    and flags are unchanged.  With no vulnerable events the result is the
    plant itself.
    """
    vulnerable = plant.alphabet.vulnerable
    if not vulnerable:
        return plant
    renamed = {attack_event(e) for e in vulnerable}
    clash = renamed & plant.alphabet.events
    if clash:
        raise ReservedNameError(
            f"alphabet already contains attack-named events: {sorted(clash)}"
        )
    alphabet = EventAlphabet(
        events=plant.alphabet.events | renamed,
        controllable=plant.alphabet.controllable,
        vulnerable=vulnerable,
        attack=plant.alphabet.attack | frozenset(renamed),
    )
    transitions = dict(plant.transitions)
    for (src, event), dst in plant.transitions.items():
        if event in vulnerable:
            transitions[(src, attack_event(event))] = dst
    return Automaton(
        states=plant.states,
        alphabet=alphabet,
        transitions=transitions,
        initial=plant.initial,
        marked=plant.marked,
        unsafe=plant.unsafe,
    )


def build_attacked_supervisor(
    supervisor: Automaton, plant_alphabet: EventAlphabet
) -> Automaton:
    """Extend the supervisor with the absorbing attack state.

    For every vulnerable event disabled at an original state, an attack
    transition leads to the attack state, which self-loops on every event:
    after an attack the supervisor constrains nothing.  The attack state is
    marked so that composed post-attack marking follows the plant component.
    """
    if ATTACK_STATE in supervisor.states:
        raise ReservedNameError(
            f"supervisor already contains the reserved state {ATTACK_STATE!r}"
        )
    if not supervisor.alphabet.events <= plant_alphabet.events:
        raise ModelError("supervisor alphabet exceeds the plant alphabet")
    vulnerable = plant_alphabet.vulnerable
    renamed = {attack_event(e) for e in vulnerable}
    clash = renamed & plant_alphabet.events
    if clash:
        raise ReservedNameError(
            f"alphabet already contains attack-named events: {sorted(clash)}"
        )
    alphabet = EventAlphabet(
        events=plant_alphabet.events | renamed,
        controllable=plant_alphabet.controllable,
        vulnerable=vulnerable,
        attack=plant_alphabet.attack | frozenset(renamed),
    )
    transitions = dict(supervisor.transitions)
    for event in alphabet.events:
        transitions[(ATTACK_STATE, event)] = ATTACK_STATE
    for state in supervisor.states:
        feasible = supervisor.active_events(state)
        for event in vulnerable:
            if event not in feasible:
                transitions[(state, attack_event(event))] = ATTACK_STATE
    return Automaton(
        states=supervisor.states | {ATTACK_STATE},
        alphabet=alphabet,
        transitions=transitions,
        initial=supervisor.initial,
        marked=supervisor.marked | {ATTACK_STATE},
        unsafe=supervisor.unsafe,
    )


@dataclass(frozen=True)
class AttackedSystem:
    """The composed closed loop of attacked supervisor and attacked plant.

    State names of ``gr`` are ``(supervisor,plant)`` pairs; the component
    maps record provenance without parsing names.  ``detection_states`` are
    the states entered by an attack transition from a pre-attack state;
    detection is assumed instantaneous there.
    """

    gr: Automaton
    attack_events: dict[str, str]  # vulnerable event -> its attack copy
    attack_state_tag: str
    detection_states: frozenset[str]
    vulnerable_plant_states: frozenset[str]
    unsafe_plant_states: frozenset[str]
    plant_component: dict[str, str]
    supervisor_component: dict[str, str]
    plant: Automaton
    supervisor: Automaton

    def is_post_attack(self, state: str) -> bool:
        return self.supervisor_component[state] == self.attack_state_tag

    @property
    def post_attack_states(self) -> frozenset[str]:
        return frozenset(s for s in self.gr.states if self.is_post_attack(s))

    @property
    def pre_attack_states(self) -> frozenset[str]:
        return frozenset(s for s in self.gr.states if not self.is_post_attack(s))


def build_attacked_closed_loop(
    plant: Automaton, supervisor: Automaton
) -> AttackedSystem:
    """Compose the attacked supervisor with the attacked plant.

    The supervisor must be a safe strict subautomaton of the plant.  With no
    vulnerable events the attack state is unreachable and pruned, so the
    result is structurally the nominal closed loop.
    """
    if not is_strict_subautomaton(supervisor, plant):
        raise NotSubautomatonError(
            "supervisor must be a strict subautomaton of the plant"
        )
    retained_unsafe = supervisor.states & plant.unsafe
    if retained_unsafe:
        raise UnsafeSupervisorError(
            f"supervisor retains unsafe plant states: {sorted(retained_unsafe)}"
        )
    attacked_plant = build_attacked_plant(plant)
    attacked_supervisor = build_attacked_supervisor(supervisor, plant.alphabet)
    gr, components = parallel_compose_components(attacked_supervisor, attacked_plant)

    supervisor_component = {s: pair[0] for s, pair in components.items()}
    plant_component = {s: pair[1] for s, pair in components.items()}
    attack_names = frozenset(gr.alphabet.attack)
    detections = set()
    for (src, event), dst in gr.transitions.items():
        if event in attack_names and supervisor_component[src] != ATTACK_STATE:
            detections.add(dst)

    return AttackedSystem(
        gr=gr,
        attack_events={e: attack_event(e) for e in plant.alphabet.vulnerable},
        attack_state_tag=ATTACK_STATE,
        detection_states=frozenset(detections),
        vulnerable_plant_states=vulnerable_states(plant),
        unsafe_plant_states=plant.unsafe,
        plant_component=plant_component,
        supervisor_component=supervisor_component,
        plant=plant,
        supervisor=supervisor,
    )


@dataclass(frozen=True)
class SafeControllabilityVerdict:
    holds: bool
    # Path from a detection state to an unsafe state through events no
    # mitigating supervisor could disable; None when the property holds.
    witness: tuple[tuple[str, str, str], ...] | None = None

    def __bool__(self) -> bool:
        return self.holds


def verify_ae_safe_controllability(system: AttackedSystem) -> SafeControllabilityVerdict:
    """Can damage always be averted after detection?

    Explores the closed loop from the detection states using only events a
    mitigating supervisor cannot rely on disabling: uncontrollable events,
    vulnerable controllable events (the attacker re-enables them), and the
    attack copies.  The property holds iff no unsafe state is reachable that
    way; otherwise a shortest offending path is returned.
    """
    gr = system.gr
    alphabet = gr.alphabet
    undisableable = alphabet.uncontrollable | alphabet.vulnerable
    # BFS with parent tracking for the witness path.
    parent: dict[str, tuple[str, str] | None] = {
        s: None for s in sorted(system.detection_states)
    }
    queue = list(sorted(system.detection_states))
    head = 0
    offender: str | None = None
    while head < len(queue):
        state = queue[head]
        head += 1
        if state in gr.unsafe:
            offender = state
            break
        for event, target in gr.successors(state):
            if event in undisableable and target not in parent:
                parent[target] = (state, event)
                queue.append(target)
    if offender is None:
        return SafeControllabilityVerdict(True, None)
    steps: list[tuple[str, str, str]] = []
    cursor = offender
    while parent[cursor] is not None:
        prev, event = parent[cursor]  # type: ignore[misc]
        steps.append((prev, event, cursor))
        cursor = prev
    steps.reverse()
    return SafeControllabilityVerdict(False, tuple(steps))
