"""Deterministic finite automata with controllability-partitioned alphabets.

This module is the kernel everything else builds on: immutable automata,
synchronous composition, accessibility/co-accessibility pruning, induced
(strict) subautomata, restricted reachability and bounded language
enumeration.  State identifiers are plain strings; composed states use the
canonical pair encoding ``(left,right)`` so component provenance survives
nesting.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

# Events carrying this suffix represent attacker-enabled occurrences of a
# vulnerable event.  Ordinary alphabets must not use it.
ATTACK_SUFFIX = "#a"


class ModelError(Exception):
    """Base class for malformed models and violated operation preconditions."""


class UnknownEventError(ModelError):
    pass


class UnknownStateError(ModelError):
    pass


class DeterminismError(ModelError):
    """A (state, event) pair was given more than one successor."""


class AttributeConflictError(ModelError):
    """An event is classified inconsistently across composed alphabets."""


class ReservedNameError(ModelError):
    """An identifier collides with the reserved attack suffix or state tag."""


def _check_identifier(name: str, role: str) -> None:
    if not isinstance(name, str) or not name:
        raise ModelError(f"{role} identifier must be a non-empty string, got {name!r}")
    if any(c.isspace() for c in name):
        raise ModelError(f"{role} identifier {name!r} must not contain whitespace")


@dataclass(frozen=True)
class EventAlphabet:
    """An event set partitioned into controllable/uncontrollable events.

    ``vulnerable`` is the subset of controllable events whose disablement an
    attacker can override.  ``attack`` holds the relabeled attacker copies
    (suffix ``#a``); it is empty for ordinary alphabets and is always
    uncontrollable.  The uncontrollable set is derived, never stored.
    """

    events: frozenset[str]
    controllable: frozenset[str]
    vulnerable: frozenset[str] = frozenset()
    attack: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", frozenset(self.events))
        object.__setattr__(self, "controllable", frozenset(self.controllable))
        object.__setattr__(self, "vulnerable", frozenset(self.vulnerable))
        object.__setattr__(self, "attack", frozenset(self.attack))
        for e in self.events:
            _check_identifier(e, "event")
        if not self.attack <= self.events:
            raise ModelError("attack events must be listed in the event set")
        for e in self.events - self.attack:
            if e.endswith(ATTACK_SUFFIX):
                raise ReservedNameError(
                    f"event {e!r} ends with the reserved attack suffix {ATTACK_SUFFIX!r}"
                )
        for e in self.attack:
            if not e.endswith(ATTACK_SUFFIX):
                raise ModelError(f"attack event {e!r} must end with {ATTACK_SUFFIX!r}")
        if not self.controllable <= self.events - self.attack:
            bad = sorted(self.controllable - (self.events - self.attack))
            raise ModelError(f"controllable events not in the plain event set: {bad}")
        if not self.vulnerable <= self.controllable:
            bad = sorted(self.vulnerable - self.controllable)
            raise ModelError(f"vulnerable events must be controllable: {bad}")

    @property
    def uncontrollable(self) -> frozenset[str]:
        return self.events - self.controllable

    def merge(self, other: "EventAlphabet") -> "EventAlphabet":
        """Union of two alphabets; conflicting attributes are hard errors."""
        shared = self.events & other.events
        for e in sorted(shared):
            if (e in self.controllable) != (e in other.controllable):
                raise AttributeConflictError(
                    f"event {e!r} is controllable in one alphabet and uncontrollable in the other"
                )
            if (e in self.attack) != (e in other.attack):
                raise AttributeConflictError(
                    f"event {e!r} is an attack event in only one alphabet"
                )
        return EventAlphabet(
            events=self.events | other.events,
            controllable=self.controllable | other.controllable,
            vulnerable=self.vulnerable | other.vulnerable,
            attack=self.attack | other.attack,
        )


@dataclass(frozen=True)
class StatePredicate:
    """A named state subset, used for regions and other marked roles."""

    name: str
    states: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))

    def __contains__(self, state: str) -> bool:
        return state in self.states

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.states))

    def check_subset_of(self, automaton: "Automaton") -> None:
        extra = self.states - automaton.states
        if extra:
            raise UnknownStateError(
                f"{self.name}: states not in the automaton: {sorted(extra)}"
            )


@dataclass(frozen=True)
class Automaton:
    """A deterministic finite automaton over an :class:`EventAlphabet`.

    ``transitions`` maps ``(state, event)`` to the successor state, which
    makes determinism structural.  ``initial`` may be ``None`` for the empty
    automaton and for induced copies whose original initial state was
    removed; such automata generate the empty language.
    """

    states: frozenset[str]
    alphabet: EventAlphabet
    transitions: Mapping[tuple[str, str], str]
    initial: str | None
    marked: frozenset[str] = frozenset()
    unsafe: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "marked", frozenset(self.marked))
        object.__setattr__(self, "unsafe", frozenset(self.unsafe))
        trans = self.transitions
        if not isinstance(trans, Mapping):
            built: dict[tuple[str, str], str] = {}
            for src, event, dst in trans:
                key = (src, event)
                if key in built:
                    raise DeterminismError(
                        f"duplicate transition for state {src!r} on event {event!r}"
                    )
                built[key] = dst
            trans = built
        else:
            trans = dict(trans)
        object.__setattr__(self, "transitions", trans)

        for s in self.states:
            _check_identifier(s, "state")
        if self.initial is not None and self.initial not in self.states:
            raise UnknownStateError(f"initial state {self.initial!r} not in state set")
        if self.initial is None and not self.states:
            pass  # the empty automaton
        if not self.marked <= self.states:
            raise UnknownStateError(
                f"marked states not in state set: {sorted(self.marked - self.states)}"
            )
        if not self.unsafe <= self.states:
            raise UnknownStateError(
                f"unsafe states not in state set: {sorted(self.unsafe - self.states)}"
            )
        for (src, event), dst in trans.items():
            if src not in self.states:
                raise UnknownStateError(f"transition source {src!r} not in state set")
            if dst not in self.states:
                raise UnknownStateError(f"transition target {dst!r} not in state set")
            if event not in self.alphabet.events:
                raise UnknownEventError(f"transition event {event!r} not in alphabet")

    # -- cached adjacency ------------------------------------------------

    @cached_property
    def _active(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {s: set() for s in self.states}
        for (src, event) in self.transitions:
            out[src].add(event)
        return {s: frozenset(evs) for s, evs in out.items()}

    @cached_property
    def _successors(self) -> dict[str, tuple[tuple[str, str], ...]]:
        out: dict[str, list[tuple[str, str]]] = {s: [] for s in self.states}
        for (src, event), dst in self.transitions.items():
            out[src].append((event, dst))
        return {s: tuple(sorted(pairs)) for s, pairs in out.items()}

    # -- queries ----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.states

    def active_events(self, state: str) -> frozenset[str]:
        """Events with a transition defined at ``state``."""
        if state not in self.states:
            raise UnknownStateError(f"unknown state {state!r}")
        return self._active[state]

    def successors(self, state: str) -> tuple[tuple[str, str], ...]:
        """Sorted ``(event, target)`` pairs defined at ``state``."""
        if state not in self.states:
            raise UnknownStateError(f"unknown state {state!r}")
        return self._successors[state]

    def run(self, sequence: Iterable[str]) -> str | None:
        """Follow ``sequence`` from the initial state.

        Returns the reached state, or ``None`` exactly when the sequence is
        not generated by the automaton.  Events outside the alphabet raise.
        """
        state = self.initial
        for event in sequence:
            if event not in self.alphabet.events:
                raise UnknownEventError(f"unknown event {event!r}")
            if state is None:
                continue  # keep validating the remaining events
            state = self.transitions.get((state, event))
        return state

    def generates(self, sequence: Iterable[str]) -> bool:
        return self.run(sequence) is not None


def empty_automaton(alphabet: EventAlphabet) -> Automaton:
    return Automaton(
        states=frozenset(),
        alphabet=alphabet,
        transitions={},
        initial=None,
    )


def induced_subautomaton(automaton: Automaton, keep: Iterable[str]) -> Automaton:
    """The copy of ``automaton`` minus all states outside ``keep``.

    All transitions between retained states are retained; per-state flags are
    restricted.  If the initial state is dropped the result has no initial
    state.
    """
    keep = frozenset(keep)
    extra = keep - automaton.states
    if extra:
        raise UnknownStateError(f"states not in the automaton: {sorted(extra)}")
    transitions = {
        (src, event): dst
        for (src, event), dst in automaton.transitions.items()
        if src in keep and dst in keep
    }
    return Automaton(
        states=keep,
        alphabet=automaton.alphabet,
        transitions=transitions,
        initial=automaton.initial if automaton.initial in keep else None,
        marked=automaton.marked & keep,
        unsafe=automaton.unsafe & keep,
    )


def reachable_from(
    automaton: Automaton,
    sources: Iterable[str],
    allowed: Iterable[str],
) -> frozenset[str]:
    """Least fixpoint of one-step successors restricted to ``allowed`` events."""
    sources = frozenset(sources)
    allowed = frozenset(allowed)
    bad_states = sources - automaton.states
    if bad_states:
        raise UnknownStateError(f"unknown source states: {sorted(bad_states)}")
    bad_events = allowed - automaton.alphabet.events
    if bad_events:
        raise UnknownEventError(f"unknown events: {sorted(bad_events)}")
    seen = set(sources)
    queue = deque(sources)
    while queue:
        state = queue.popleft()
        for event, target in automaton.successors(state):
            if event in allowed and target not in seen:
                seen.add(target)
                queue.append(target)
    return frozenset(seen)


def accessible(automaton: Automaton) -> Automaton:
    """Restrict to states reachable from the initial state."""
    if automaton.initial is None:
        return empty_automaton(automaton.alphabet)
    keep = reachable_from(automaton, {automaton.initial}, automaton.alphabet.events)
    if keep == automaton.states:
        return automaton
    return induced_subautomaton(automaton, keep)


def coaccessible(automaton: Automaton) -> Automaton:
    """Restrict to states from which some marked state is reachable."""
    reverse: dict[str, set[str]] = {s: set() for s in automaton.states}
    for (src, _event), dst in automaton.transitions.items():
        reverse[dst].add(src)
    seen = set(automaton.marked)
    queue = deque(seen)
    while queue:
        state = queue.popleft()
        for pred in reverse[state]:
            if pred not in seen:
                seen.add(pred)
                queue.append(pred)
    if seen == automaton.states:
        return automaton
    if not seen:
        return empty_automaton(automaton.alphabet)
    return induced_subautomaton(automaton, seen)


def trim(automaton: Automaton) -> Automaton:
    """Accessible and co-accessible part (the nonblocking core)."""
    return accessible(coaccessible(automaton))


def pair_state(left: str, right: str) -> str:
    return f"({left},{right})"


def parallel_compose_components(
    left: Automaton, right: Automaton
) -> tuple[Automaton, dict[str, tuple[str, str]]]:
    """Synchronous composition, also returning the component map.

    Shared events synchronize, private events interleave.  Only the
    accessible part of the product is built.  A composed state is marked iff
    both components are marked and unsafe iff either component is unsafe.
    """
    alphabet = left.alphabet.merge(right.alphabet)
    if left.initial is None or right.initial is None:
        return empty_automaton(alphabet), {}

    l_events = left.alphabet.events
    r_events = right.alphabet.events
    start = (left.initial, right.initial)
    components: dict[str, tuple[str, str]] = {pair_state(*start): start}
    transitions: dict[tuple[str, str], str] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        lx, rx = queue.popleft()
        name = pair_state(lx, rx)
        for event in sorted(alphabet.events):
            in_l = event in l_events
            in_r = event in r_events
            if in_l and in_r:
                lt = left.transitions.get((lx, event))
                rt = right.transitions.get((rx, event))
                if lt is None or rt is None:
                    continue
                nxt = (lt, rt)
            elif in_l:
                lt = left.transitions.get((lx, event))
                if lt is None:
                    continue
                nxt = (lt, rx)
            else:
                rt = right.transitions.get((rx, event))
                if rt is None:
                    continue
                nxt = (lx, rt)
            transitions[(name, event)] = pair_state(*nxt)
            if nxt not in seen:
                seen.add(nxt)
                components[pair_state(*nxt)] = nxt
                queue.append(nxt)

    states = frozenset(components)
    marked = frozenset(
        s for s, (lx, rx) in components.items()
        if lx in left.marked and rx in right.marked
    )
    unsafe = frozenset(
        s for s, (lx, rx) in components.items()
        if lx in left.unsafe or rx in right.unsafe
    )
    product = Automaton(
        states=states,
        alphabet=alphabet,
        transitions=transitions,
        initial=pair_state(*start),
        marked=marked,
        unsafe=unsafe,
    )
    return product, components


def parallel_compose(left: Automaton, right: Automaton) -> Automaton:
    product, _ = parallel_compose_components(left, right)
    return product


def is_strict_subautomaton(candidate: Automaton, parent: Automaton) -> bool:
    """True iff ``candidate`` is ``parent`` minus a set of states.

    That is: the state set is a subset, every parent transition between
    retained states is present, no extra transitions exist, and the initial
    state is the parent's (or absent exactly when the parent's initial state
    was removed).  Flags are not compared; the relation is structural.
    """
    if candidate.alphabet.events != parent.alphabet.events:
        raise ModelError("strict-subautomaton comparison requires the same alphabet")
    if not candidate.states <= parent.states:
        return False
    if candidate.initial is None:
        if parent.initial in candidate.states:
            return False
    elif candidate.initial != parent.initial:
        return False
    for key, dst in candidate.transitions.items():
        if parent.transitions.get(key) != dst:
            return False
    for (src, event), dst in parent.transitions.items():
        if src in candidate.states and dst in candidate.states:
            if candidate.transitions.get((src, event)) != dst:
                return False
    return True


def bounded_language(automaton: Automaton, k: int) -> dict[tuple[str, ...], bool]:
    """All generated strings of length <= ``k``, mapped to their marked flag."""
    if k < 0:
        raise ValueError("length bound must be >= 0")
    out: dict[tuple[str, ...], bool] = {}
    if automaton.initial is None:
        return out
    frontier: list[tuple[tuple[str, ...], str]] = [((), automaton.initial)]
    out[()] = automaton.initial in automaton.marked
    for _ in range(k):
        nxt: list[tuple[tuple[str, ...], str]] = []
        for string, state in frontier:
            for event, target in automaton.successors(state):
                extended = string + (event,)
                out[extended] = target in automaton.marked
                nxt.append((extended, target))
        frontier = nxt
    return out


def relabel_states(automaton: Automaton, mapping: Mapping[str, str]) -> Automaton:
    """Rename states through ``mapping``; unmapped states keep their name."""
    def name(s: str) -> str:
        return mapping.get(s, s)

    renamed = {name(s) for s in automaton.states}
    if len(renamed) != len(automaton.states):
        raise ModelError("state relabeling is not injective")
    return Automaton(
        states=frozenset(renamed),
        alphabet=automaton.alphabet,
        transitions={
            (name(src), event): name(dst)
            for (src, event), dst in automaton.transitions.items()
        },
        initial=None if automaton.initial is None else name(automaton.initial),
        marked=frozenset(name(s) for s in automaton.marked),
        unsafe=frozenset(name(s) for s in automaton.unsafe),
    )
