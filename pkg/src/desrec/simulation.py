"""Step-by-step closed-loop execution with pluggable attacker policies.

The scheduler picks uniformly at random among the events the supervisor
leaves enabled; the attacker policy may additionally inject a feasible
attack event.  Runs are deterministic functions of (system, supervisor,
policy, max_steps, seed), which makes traces reproducible witnesses for the
safety and recovery claims.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .automata import Automaton, is_strict_subautomaton
from .attacks import AttackedSystem
from .synthesis import NotSubautomatonError

POLICY_NONE = "none"
POLICY_FIRST = "first-opportunity"
POLICY_RANDOM = "random"
POLICY_SCRIPTED = "scripted"

REASON_DEADLOCK = "deadlock"
REASON_STEP_LIMIT = "step-limit"
REASON_QUIESCED = "reached-region-and-quiesced"


@dataclass(frozen=True)
class AttackerPolicy:
    kind: str
    probability: float = 0.0
    seed: int | None = None
    step_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (POLICY_NONE, POLICY_FIRST, POLICY_RANDOM, POLICY_SCRIPTED):
            raise ValueError(f"unknown attacker policy kind {self.kind!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("attack probability must lie in [0, 1]")
        if list(self.step_indices) != sorted(set(self.step_indices)):
            raise ValueError("scripted step indices must be strictly increasing")

    @classmethod
    def none(cls) -> "AttackerPolicy":
        return cls(POLICY_NONE)

    @classmethod
    def first_opportunity(cls) -> "AttackerPolicy":
        return cls(POLICY_FIRST)

    @classmethod
    def random_attacks(cls, probability: float, seed: int | None = None) -> "AttackerPolicy":
        return cls(POLICY_RANDOM, probability=probability, seed=seed)

    @classmethod
    def scripted(cls, steps: Iterable[int]) -> "AttackerPolicy":
        return cls(POLICY_SCRIPTED, step_indices=tuple(steps))


def parse_policy(text: str) -> AttackerPolicy:
    """Parse CLI policy syntax: none | first-opportunity | random:P[:SEED] |
    scripted:I,J,..."""
    head, _, rest = text.partition(":")
    if head == POLICY_NONE:
        return AttackerPolicy.none()
    if head == POLICY_FIRST:
        return AttackerPolicy.first_opportunity()
    if head == POLICY_RANDOM:
        if not rest:
            raise ValueError("random policy needs a probability, e.g. random:0.5")
        prob, _, seed = rest.partition(":")
        return AttackerPolicy.random_attacks(
            float(prob), int(seed) if seed else None
        )
    if head == POLICY_SCRIPTED:
        if not rest:
            raise ValueError("scripted policy needs step indices, e.g. scripted:3,7")
        return AttackerPolicy.scripted(int(tok) for tok in rest.split(","))
    raise ValueError(f"unknown attacker policy {text!r}")


@dataclass(frozen=True)
class TraceStep:
    before: str
    event: str
    after: str
    attacked: bool
    post_attack: bool
    in_region: bool
    unsafe: bool
    vulnerable: bool


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]
    seed: int
    terminated_reason: str
    start: str
    supervisor: Automaton


def simulate(
    system: AttackedSystem,
    supervisor: Automaton,
    policy: AttackerPolicy,
    max_steps: int,
    seed: int,
    region: frozenset[str] | None = None,
    quiescence_steps: int = 10,
) -> Trace:
    """Run the closed loop under ``supervisor`` with an attacker.

    At every step the enabled set is the supervisor's active events (attack
    copies excluded); when the policy fires, one feasible attack event joins
    the pool, and the scheduler picks uniformly among the pool.  If an attack
    drives the run outside the supervisor's states, all closed-loop events
    stay enabled (the supervisor constrains nothing it no longer tracks).
    Runs stop on deadlock, on the step limit, or once the run has stayed in
    the region for ``quiescence_steps`` consecutive post-attack steps.
    """
    gr = system.gr
    if not is_strict_subautomaton(supervisor, gr):
        raise NotSubautomatonError(
            "supervisor must be a strict subautomaton of the attacked closed loop"
        )
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if gr.initial is None:
        return Trace((), seed, REASON_DEADLOCK, "", supervisor)

    scheduler = random.Random(f"{seed}:scheduler")
    attacker_seed = policy.seed if policy.seed is not None else seed
    attacker = random.Random(f"{attacker_seed}:attacker")
    attacks = gr.alphabet.attack
    scripted = set(policy.step_indices)

    def plant_of(state: str) -> str:
        return system.plant_component[state]

    steps: list[TraceStep] = []
    current = gr.initial
    attacked_already = False
    quiet = 0
    reason = REASON_STEP_LIMIT
    for index in range(max_steps):
        if current in supervisor.states:
            pool = sorted(supervisor.active_events(current) - attacks)
        else:
            pool = sorted(gr.active_events(current) - attacks)
        opportunities = sorted(gr.active_events(current) & attacks)
        injected: str | None = None
        if opportunities:
            if policy.kind == POLICY_FIRST and not attacked_already:
                injected = opportunities[0]
            elif policy.kind == POLICY_RANDOM:
                if attacker.random() < policy.probability:
                    injected = attacker.choice(opportunities)
            elif policy.kind == POLICY_SCRIPTED and index in scripted:
                injected = opportunities[0]
        if injected is not None:
            pool.append(injected)
        if not pool:
            reason = REASON_DEADLOCK
            break
        event = scheduler.choice(pool)
        after = gr.transitions[(current, event)]
        attacked = event in attacks
        attacked_already = attacked_already or attacked
        post = system.is_post_attack(after)
        in_region = region is not None and plant_of(after) in region
        steps.append(
            TraceStep(
                before=current,
                event=event,
                after=after,
                attacked=attacked,
                post_attack=post,
                in_region=in_region,
                unsafe=after in gr.unsafe,
                vulnerable=plant_of(after) in system.vulnerable_plant_states,
            )
        )
        current = after
        if post and in_region:
            quiet += 1
            if quiet >= quiescence_steps:
                reason = REASON_QUIESCED
                break
        else:
            quiet = 0
    return Trace(tuple(steps), seed, reason, gr.initial, supervisor)


@dataclass(frozen=True)
class TraceReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_trace(
    trace: Trace, system: AttackedSystem, region: frozenset[str]
) -> TraceReport:
    """Replay-time monitors over a finished trace.

    Checks: (a) the steps chain through the closed loop's transition map;
    (b) no post-attack step lands on a vulnerable or unsafe plant component;
    (c) at every post-attack step some region component stays reachable
    inside the supervisor that produced the trace; (d) from the first
    post-attack step inside the region onward, no attack event is ever
    feasible again.
    """
    gr = system.gr
    violations: list[str] = []

    cursor = trace.start
    for i, step in enumerate(trace.steps):
        if step.before != cursor:
            violations.append(f"step {i}: chain broken at {step.before!r}")
        if gr.transitions.get((step.before, step.event)) != step.after:
            violations.append(
                f"step {i}: no closed-loop transition {step.before!r} "
                f"--{step.event}--> {step.after!r}"
            )
        cursor = step.after

    bad = system.vulnerable_plant_states | system.unsafe_plant_states

    # Reachability of the region inside the supervisor, memoized per state.
    sup = trace.supervisor
    region_reach: dict[str, bool] = {}

    def can_reach_region(state: str) -> bool:
        if state in region_reach:
            return region_reach[state]
        if state not in sup.states:
            region_reach[state] = False
            return False
        seen = {state}
        stack = [state]
        found = False
        while stack:
            s = stack.pop()
            if system.plant_component[s] in region:
                found = True
                break
            for _event, target in sup.successors(s):
                if target not in seen:
                    seen.add(target)
                    stack.append(target)
        if not found:
            # The whole explored closure is a dead end.
            for s in seen:
                region_reach[s] = False
        region_reach[state] = found
        return found

    recovered_at: int | None = None
    for i, step in enumerate(trace.steps):
        if step.post_attack:
            comp = system.plant_component[step.after]
            if comp in bad:
                violations.append(
                    f"step {i}: post-attack visit to vulnerable/unsafe component {comp!r}"
                )
            if not can_reach_region(step.after):
                violations.append(
                    f"step {i}: region unreachable inside the supervisor from {step.after!r}"
                )
            if recovered_at is None and step.in_region:
                recovered_at = i
    if recovered_at is not None:
        for i in range(recovered_at, len(trace.steps)):
            state = trace.steps[i].after
            feasible_attacks = gr.active_events(state) & gr.alphabet.attack
            if feasible_attacks:
                violations.append(
                    f"step {i}: attack events feasible after recovery: "
                    f"{sorted(feasible_attacks)}"
                )
    return TraceReport(tuple(violations))


def trace_records(trace: Trace) -> list[dict]:
    """One dict per step, ready for line-delimited serialization."""
    return [
        {
            "before": s.before,
            "event": s.event,
            "after": s.after,
            "attacked": s.attacked,
            "post_attack": s.post_attack,
            "in_region": s.in_region,
            "unsafe": s.unsafe,
            "vulnerable": s.vulnerable,
        }
        for s in trace.steps
    ]
