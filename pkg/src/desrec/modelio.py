"""Model file parsing, serialization, and DOT graph export.

The native format is line-oriented and human-diffable::

    version 1

    [automaton plant]
    states 1 2 3
    events go:c stop:u fire:v
    initial 1
    marked 1
    unsafe 3
    trans 1 go 2

    [region]
    states 1 2

    [scenario]
    vulnerable fire

Event flags: ``c`` controllable, ``u`` uncontrollable, ``v`` vulnerable
(controllable), ``a`` attack copy (uncontrollable, name ends in ``#a``).
``#`` starts a comment.  A file may carry several named automaton blocks
(bundles use ``plant`` and ``supervisor``); the optional scenario block
overrides the vulnerable event set of every automaton in the file.  A JSON
document with the same content is accepted interchangeably.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

from .automata import (
    ATTACK_SUFFIX,
    Automaton,
    EventAlphabet,
    ModelError,
)

FORMAT_VERSION = 1

_FLAGS = {"c", "u", "v", "a"}


class ModelSyntaxError(ModelError):
    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.column = column


class ModelSemanticError(ModelError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class ModelDocument:
    version: int
    automata: dict[str, Automaton]
    region: frozenset[str] | None = None
    vulnerable: frozenset[str] | None = None  # scenario override

    def single(self) -> Automaton:
        if len(self.automata) != 1:
            raise ModelSemanticError(
                f"expected exactly one automaton block, found {len(self.automata)}"
            )
        return next(iter(self.automata.values()))


@dataclass(frozen=True)
class Bundle:
    """A resolved plant/supervisor pair with the scenario applied."""

    plant: Automaton
    supervisor: Automaton
    region: frozenset[str] | None
    vulnerable: frozenset[str]


def _with_vulnerable(automaton: Automaton, vulnerable: frozenset[str]) -> Automaton:
    alphabet = automaton.alphabet
    missing = vulnerable - alphabet.controllable
    if missing:
        raise ModelSemanticError(
            f"vulnerable events must be declared controllable: {sorted(missing)}"
        )
    if alphabet.vulnerable == vulnerable:
        return automaton
    return replace(
        automaton, alphabet=replace(alphabet, vulnerable=vulnerable)
    )


def resolve_bundle(doc: ModelDocument) -> Bundle:
    """Extract plant and supervisor, applying the scenario override."""
    for name in ("plant", "supervisor"):
        if name not in doc.automata:
            raise ModelSemanticError(f"bundle is missing an [automaton {name}] block")
    plant = doc.automata["plant"]
    supervisor = doc.automata["supervisor"]
    vulnerable = (
        doc.vulnerable if doc.vulnerable is not None else plant.alphabet.vulnerable
    )
    return Bundle(
        plant=_with_vulnerable(plant, vulnerable),
        supervisor=_with_vulnerable(supervisor, vulnerable),
        region=doc.region,
        vulnerable=vulnerable,
    )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _AutomatonDraft:
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.states: list[str] | None = None
        self.events: dict[str, str] = {}
        self.initial: str | None = None
        self.marked: list[str] = []
        self.unsafe: list[str] = []
        self.transitions: list[tuple[str, str, str, int]] = []

    def build(self) -> Automaton:
        if self.states is None:
            raise ModelSemanticError(
                f"automaton {self.name!r} has no 'states' line", self.line
            )
        if self.initial is None:
            raise ModelSemanticError(
                f"automaton {self.name!r} has no 'initial' line", self.line
            )
        states = set(self.states)
        if len(states) != len(self.states):
            dupes = sorted({s for s in self.states if self.states.count(s) > 1})
            raise ModelSemanticError(
                f"automaton {self.name!r} declares duplicate states: {dupes}",
                self.line,
            )
        controllable, vulnerable, attack = set(), set(), set()
        for event, flag in self.events.items():
            if flag in ("c", "v"):
                controllable.add(event)
            if flag == "v":
                vulnerable.add(event)
            if flag == "a":
                attack.add(event)
        alphabet = EventAlphabet(
            events=frozenset(self.events),
            controllable=frozenset(controllable),
            vulnerable=frozenset(vulnerable),
            attack=frozenset(attack),
        )
        transitions: dict[tuple[str, str], str] = {}
        for src, event, dst, line in self.transitions:
            for state in (src, dst):
                if state not in states:
                    raise ModelSemanticError(
                        f"transition references undeclared state {state!r}", line
                    )
            if event not in self.events:
                raise ModelSemanticError(
                    f"transition uses undeclared event {event!r}", line
                )
            if (src, event) in transitions:
                raise ModelSemanticError(
                    f"duplicate transition from {src!r} on {event!r}", line
                )
            transitions[(src, event)] = dst
        for role, group in (("initial", [self.initial]), ("marked", self.marked),
                            ("unsafe", self.unsafe)):
            for state in group:
                if state not in states:
                    raise ModelSemanticError(
                        f"{role} state {state!r} is not declared", self.line
                    )
        return Automaton(
            states=frozenset(states),
            alphabet=alphabet,
            transitions=transitions,
            initial=self.initial,
            marked=frozenset(self.marked),
            unsafe=frozenset(self.unsafe),
        )


def _tokenize(line: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    col = 0
    for raw in line.split():
        col = line.index(raw, col)
        tokens.append((raw, col + 1))
        col += len(raw)
    return tokens


def parse_model(text: str) -> ModelDocument:
    """Parse the native text format or the JSON interchange format."""
    if text.lstrip().startswith("{"):
        return _parse_json(text)

    version: int | None = None
    automata: dict[str, Automaton] = {}
    region: frozenset[str] | None = None
    vulnerable: frozenset[str] | None = None
    draft: _AutomatonDraft | None = None
    section: str | None = None

    def close_draft() -> None:
        nonlocal draft
        if draft is not None:
            automata[draft.name] = draft.build()
            draft = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ModelSyntaxError("unterminated section header", lineno)
            if version is None:
                raise ModelSyntaxError("missing 'version' before first section", lineno)
            header = stripped[1:-1].split()
            close_draft()
            if header[0] == "automaton":
                if len(header) != 2:
                    raise ModelSyntaxError(
                        "automaton section needs a name: [automaton NAME]", lineno
                    )
                if header[1] in automata:
                    raise ModelSemanticError(
                        f"duplicate automaton block {header[1]!r}", lineno
                    )
                draft = _AutomatonDraft(header[1], lineno)
                section = "automaton"
            elif header == ["region"]:
                if region is not None:
                    raise ModelSemanticError("duplicate region block", lineno)
                section = "region"
            elif header == ["scenario"]:
                if vulnerable is not None:
                    raise ModelSemanticError("duplicate scenario block", lineno)
                section = "scenario"
            else:
                raise ModelSyntaxError(f"unknown section {stripped!r}", lineno)
            continue

        tokens = _tokenize(line)
        key, col = tokens[0]
        args = [t for t, _ in tokens[1:]]
        if version is None:
            if key != "version":
                raise ModelSyntaxError(
                    "file must start with 'version 1'", lineno, col
                )
            if args != [str(FORMAT_VERSION)]:
                raise ModelSyntaxError(
                    f"unsupported format version {' '.join(args)!r}", lineno
                )
            version = FORMAT_VERSION
            continue

        if section == "automaton":
            assert draft is not None
            if key == "states":
                if draft.states is not None:
                    raise ModelSemanticError("duplicate 'states' line", lineno)
                if not args:
                    raise ModelSyntaxError("'states' needs at least one state", lineno)
                draft.states = args
            elif key == "events":
                for token, tcol in tokens[1:]:
                    name, sep, flag = token.partition(":")
                    if not sep or flag not in _FLAGS:
                        raise ModelSyntaxError(
                            f"event token {token!r} must look like name:c|u|v|a",
                            lineno,
                            tcol,
                        )
                    if name in draft.events:
                        raise ModelSemanticError(
                            f"duplicate event declaration {name!r}", lineno
                        )
                    draft.events[name] = flag
            elif key == "initial":
                if draft.initial is not None:
                    raise ModelSemanticError("duplicate 'initial' line", lineno)
                if len(args) != 1:
                    raise ModelSyntaxError("'initial' needs exactly one state", lineno)
                draft.initial = args[0]
            elif key == "marked":
                draft.marked.extend(args)
            elif key == "unsafe":
                draft.unsafe.extend(args)
            elif key == "trans":
                if len(args) != 3:
                    raise ModelSyntaxError(
                        "'trans' needs: trans SOURCE EVENT TARGET", lineno, col
                    )
                draft.transitions.append((args[0], args[1], args[2], lineno))
            else:
                raise ModelSyntaxError(f"unknown directive {key!r}", lineno, col)
        elif section == "region":
            if key != "states":
                raise ModelSyntaxError(
                    f"unknown directive {key!r} in region block", lineno, col
                )
            region = (region or frozenset()) | frozenset(args)
        elif section == "scenario":
            if key != "vulnerable":
                raise ModelSyntaxError(
                    f"unknown directive {key!r} in scenario block", lineno, col
                )
            vulnerable = (vulnerable or frozenset()) | frozenset(args)
        else:
            raise ModelSyntaxError(f"directive {key!r} outside any section", lineno, col)

    if version is None:
        raise ModelSyntaxError("empty model file", 1)
    close_draft()
    if not automata:
        raise ModelSemanticError("model file declares no automaton")
    doc = ModelDocument(
        version=version, automata=automata, region=region, vulnerable=vulnerable
    )
    _cross_check(doc)
    return doc


def _cross_check(doc: ModelDocument) -> None:
    if doc.region is not None:
        known = set().union(*(a.states for a in doc.automata.values()))
        dangling = doc.region - known
        if dangling:
            raise ModelSemanticError(
                f"region references unknown states: {sorted(dangling)}"
            )
    if doc.vulnerable is not None:
        for name, automaton in doc.automata.items():
            missing = doc.vulnerable - automaton.alphabet.controllable
            if missing:
                raise ModelSemanticError(
                    f"scenario marks events not controllable in {name!r}: "
                    f"{sorted(missing)}"
                )


def _parse_json(text: str) -> ModelDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(data, dict):
        raise ModelSemanticError("top-level JSON value must be an object")
    allowed = {"version", "automata", "region", "scenario"}
    unknown = set(data) - allowed
    if unknown:
        raise ModelSemanticError(f"unknown fields: {sorted(unknown)}")
    if data.get("version") != FORMAT_VERSION:
        raise ModelSemanticError(f"unsupported format version {data.get('version')!r}")
    automata: dict[str, Automaton] = {}
    for name, block in dict(data.get("automata", {})).items():
        block_allowed = {"states", "events", "initial", "marked", "unsafe", "transitions"}
        unknown = set(block) - block_allowed
        if unknown:
            raise ModelSemanticError(
                f"automaton {name!r}: unknown fields {sorted(unknown)}"
            )
        events, controllable, vulnerable, attack = set(), set(), set(), set()
        for entry in block.get("events", []):
            events.add(entry["name"])
            if entry.get("controllable"):
                controllable.add(entry["name"])
            if entry.get("vulnerable"):
                vulnerable.add(entry["name"])
            if entry.get("attack"):
                attack.add(entry["name"])
        try:
            alphabet = EventAlphabet(
                frozenset(events),
                frozenset(controllable),
                frozenset(vulnerable),
                frozenset(attack),
            )
            automata[name] = Automaton(
                states=frozenset(block.get("states", [])),
                alphabet=alphabet,
                transitions=[tuple(t) for t in block.get("transitions", [])],
                initial=block.get("initial"),
                marked=frozenset(block.get("marked", [])),
                unsafe=frozenset(block.get("unsafe", [])),
            )
        except ModelError as exc:
            raise ModelSemanticError(f"automaton {name!r}: {exc}") from exc
    if not automata:
        raise ModelSemanticError("model file declares no automaton")
    region = data.get("region")
    scenario = data.get("scenario") or {}
    if set(scenario) - {"vulnerable"}:
        raise ModelSemanticError(
            f"unknown scenario fields: {sorted(set(scenario) - {'vulnerable'})}"
        )
    doc = ModelDocument(
        version=FORMAT_VERSION,
        automata=automata,
        region=None if region is None else frozenset(region),
        vulnerable=(
            None if "vulnerable" not in scenario
            else frozenset(scenario["vulnerable"])
        ),
    )
    _cross_check(doc)
    return doc


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _event_flag(alphabet: EventAlphabet, event: str) -> str:
    if event in alphabet.attack:
        return "a"
    if event in alphabet.vulnerable:
        return "v"
    if event in alphabet.controllable:
        return "c"
    return "u"


def serialize_model(doc: ModelDocument, fmt: str = "text") -> str:
    if fmt == "json":
        return _serialize_json(doc)
    if fmt != "text":
        raise ValueError(f"unknown serialization format {fmt!r}")
    lines = [f"version {doc.version}", ""]
    for name in sorted(doc.automata):
        automaton = doc.automata[name]
        if automaton.initial is None:
            raise ModelError(
                f"automaton {name!r} has no initial state and cannot be serialized"
            )
        alphabet = automaton.alphabet
        lines.append(f"[automaton {name}]")
        lines.append("states " + " ".join(sorted(automaton.states)))
        lines.append(
            "events "
            + " ".join(f"{e}:{_event_flag(alphabet, e)}" for e in sorted(alphabet.events))
        )
        lines.append(f"initial {automaton.initial}")
        if automaton.marked:
            lines.append("marked " + " ".join(sorted(automaton.marked)))
        if automaton.unsafe:
            lines.append("unsafe " + " ".join(sorted(automaton.unsafe)))
        for (src, event), dst in sorted(automaton.transitions.items()):
            lines.append(f"trans {src} {event} {dst}")
        lines.append("")
    if doc.region is not None:
        lines.append("[region]")
        lines.append("states " + " ".join(sorted(doc.region)))
        lines.append("")
    if doc.vulnerable is not None:
        lines.append("[scenario]")
        lines.append("vulnerable " + " ".join(sorted(doc.vulnerable)))
        lines.append("")
    return "\n".join(lines)


def _serialize_json(doc: ModelDocument) -> str:
    blocks = {}
    for name in sorted(doc.automata):
        automaton = doc.automata[name]
        if automaton.initial is None:
            raise ModelError(
                f"automaton {name!r} has no initial state and cannot be serialized"
            )
        alphabet = automaton.alphabet
        blocks[name] = {
            "states": sorted(automaton.states),
            "events": [
                {
                    "name": e,
                    "controllable": e in alphabet.controllable,
                    "vulnerable": e in alphabet.vulnerable,
                    "attack": e in alphabet.attack,
                }
                for e in sorted(alphabet.events)
            ],
            "initial": automaton.initial,
            "marked": sorted(automaton.marked),
            "unsafe": sorted(automaton.unsafe),
            "transitions": [
                [src, event, dst]
                for (src, event), dst in sorted(automaton.transitions.items())
            ],
        }
    payload: dict = {"version": doc.version, "automata": blocks}
    if doc.region is not None:
        payload["region"] = sorted(doc.region)
    if doc.vulnerable is not None:
        payload["scenario"] = {"vulnerable": sorted(doc.vulnerable)}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------


def _quote(token: str) -> str:
    return '"' + token.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(
    automaton: Automaton,
    region: Iterable[str] | None = None,
    recovery: Iterable[tuple[str, str]] | None = None,
    name: str = "model",
) -> str:
    """Render the automaton as GraphViz DOT text.

    Marked states get a double border; unsafe states a red fill, states with
    a feasible vulnerable event a yellow fill, region states a green fill.
    Attack-event edges are drawn red; the given recovery (state, event) steps
    blue.
    """
    region = frozenset(region or ())
    recovery = frozenset(recovery or ())
    vulnerable = frozenset(
        s
        for s in automaton.states
        if automaton.active_events(s) & automaton.alphabet.vulnerable
    )
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;", "  node [shape=circle];"]
    if automaton.initial is not None:
        lines.append('  "__start" [shape=point, label=""];')
    for state in sorted(automaton.states):
        attrs = []
        if state in automaton.marked:
            attrs.append("peripheries=2")
        fill = None
        if state in automaton.unsafe:
            fill = "lightcoral"
        elif state in vulnerable:
            fill = "khaki"
        elif state in region:
            fill = "palegreen"
        if fill:
            attrs.append('style=filled')
            attrs.append(f'fillcolor="{fill}"')
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(state)}{suffix};")
    if automaton.initial is not None:
        lines.append(f'  "__start" -> {_quote(automaton.initial)};')
    for (src, event), dst in sorted(automaton.transitions.items()):
        attrs = [f"label={_quote(event)}"]
        if event in automaton.alphabet.attack:
            attrs.append('color="red"')
            attrs.append('fontcolor="red"')
        elif (src, event) in recovery:
            attrs.append('color="blue"')
            attrs.append('fontcolor="blue"')
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
