"""Count-with-exponential-decay for lobby counters, including weighted decay.

A unit decay takes a counter ``C`` to ``C - 1`` with probability ``b**-C``.
``de[k]`` tabulates the expected number of unit decays that take a counter
from ``k`` to zero, so a weight-``w`` collision can be resolved with one
table lookup instead of ``w`` random draws.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field


@dataclass(frozen=True)
class DecayTable:
    decay_base: float = 1.08
    lobby_threshold: int = 16
    de: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if not self.decay_base > 1.0:
            raise ValueError(f"decay_base must be > 1, got {self.decay_base}")
        if self.lobby_threshold < 1:
            raise ValueError(f"lobby_threshold must be >= 1, got {self.lobby_threshold}")
        de = [0.0]
        power = 1.0
        for _ in range(self.lobby_threshold):
            power *= self.decay_base
            de.append(de[-1] + power)
        object.__setattr__(self, "de", tuple(de))

    def __getitem__(self, k: int) -> float:
        return self.de[k]

    def __len__(self) -> int:
        return len(self.de)


def expected_counter(counter: int, weight: float, decay_base: float) -> float:
    """Closed-form expected counter after ``weight`` unit decays.

    Returns ``-inf`` once the weight exceeds what the counter can absorb.
    """
    inner = decay_base**counter - weight * (decay_base - 1) / decay_base
    if inner <= 0:
        return -math.inf
    return math.log(inner, decay_base)


def decay_counter(table: DecayTable, counter: int, weight: int, rng) -> tuple[int, int]:
    """Apply a weight-``weight`` collision to a lobby counter.

    Returns ``(new_counter, leftover)``. ``leftover`` only matters when the
    counter reaches zero: it is the weight the incoming item keeps when it
    takes over the lobby slot.
    """
    if not 1 <= counter < len(table.de):
        raise ValueError(f"counter must lie in [1, {len(table.de) - 1}], got {counter}")
    if weight < 1:
        raise ValueError(f"weight must be >= 1, got {weight}")
    de = table.de
    b = table.decay_base

    if weight == 1:
        if rng.random() < b**-counter:
            counter -= 1
        return counter, (1 if counter == 0 else 0)

    full = de[counter]
    if weight >= full:
        return 0, int(math.floor(weight - full))

    step = full - de[counter - 1]
    if weight < step:
        if rng.random() < weight / step:
            counter -= 1
        return counter, 0

    # de[lo] <= target < de[lo + 1]; round to a neighbour so the expected
    # remaining decay budget equals target exactly
    target = full - weight
    lo = bisect_right(de, target) - 1
    if de[lo] < target and rng.random() < (target - de[lo]) / (de[lo + 1] - de[lo]):
        lo += 1
    return lo, 0
