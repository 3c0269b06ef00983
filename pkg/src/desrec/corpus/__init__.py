"""Bundled reference models.

Each corpus file is a plant/supervisor bundle with a region and a scenario
block; the file headers document which published constraints the
reconstruction satisfies.
"""

from __future__ import annotations

from importlib import resources

from .modelio import Bundle, parse_model, resolve_bundle

RUNNING_EXAMPLE = "running_example"
FISCHERTECHNIK = ("fischertechnik_scenario1", "fischertechnik_scenario2",
                  "fischertechnik_scenario3")


def corpus_names() -> tuple[str, ...]:
    return (RUNNING_EXAMPLE,) + FISCHERTECHNIK


def corpus_text(name: str) -> str:
    path = resources.files("desrec.corpus").joinpath(f"{name}.des")
    return path.read_text(encoding="utf-8")


def load(name: str) -> Bundle:
    return resolve_bundle(parse_model(corpus_text(name)))


def running_example() -> Bundle:
    return load(RUNNING_EXAMPLE)


def fischertechnik(scenario: int) -> Bundle:
    if scenario not in (1, 2, 3):
        raise ValueError("scenario must be 1, 2, or 3")
    return load(FISCHERTECHNIK[scenario - 1])
