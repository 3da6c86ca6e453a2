"""Example networks used throughout the docs and tests.

Each entry carries the network text, a positive state in the class of
interest, and (where known) the steady state of that class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network, parse_network


@dataclass(frozen=True)
class Example:
    name: str
    text: str
    x0: tuple[float, ...]
    steady_state: tuple[float, ...] | None
    complex_balanced: bool

    @property
    def network(self) -> Network:
        return parse_network(self.text)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.steady_state, dtype=float)


BIRTH_DEATH = Example("birth_death", "A <-> 0, k=1, k=1", (3.0,), (1.0,), True)
ANDERSON_13 = Example("anderson13", "A -> 0, k=1; 0 -> 2A, k=1", (1.0,), (2.0,), False)
ISOMER = Example("isomer", "A1 <-> A2, k=1, k=1", (2.0, 0.0), (1.0, 1.0), True)
TRIANGLE = Example(
    "three_species",
    "A1 + A2 <-> 2A2, k=1, k=1\n2A2 <-> A2 + A3, k=1, k=1",
    (1.0, 1.0, 1.0),
    (1.0, 1.0, 1.0),
    True,
)
DIMER = Example("dimer", "2A <-> B, k=2, k=1\n0 <-> A, k=1, k=1", (0.5, 0.5), (1.0, 2.0), True)
CYCLE = Example("cycle", "0 -> A, k=1\nA -> B, k=2\nB -> 0, k=1", (0.2, 0.3), (0.5, 1.0), True)
SCHLOGL_LIKE = Example(
    "feed_dimerize",
    "0 -> A, k=1\nA -> B, k=1\n2B -> 0, k=2",
    (0.5, 0.5),
    (1.0, 0.5),
    False,
)
BINDING = Example("binding", "A + B <-> C, k=1, k=2", (1.0, 2.0, 0.5), None, True)

CORPUS = (BIRTH_DEATH, ANDERSON_13, ISOMER, TRIANGLE, DIMER, CYCLE, SCHLOGL_LIKE, BINDING)
BY_NAME = {e.name: e for e in CORPUS}
