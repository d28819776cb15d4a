"""Counter-based random number streams.

Every draw in the package is addressed by (seed, path, kind, index): the
index-th variate of a given kind on a given sample path.  Each (seed, path,
kind) triple keys its own Philox counter generator, and an index range is
reached by advancing the counter, so a window of draws can be regenerated at
any time, in any order, by any caller, and always yields the same numbers.
Replications (paths) are therefore reproducible and mutually independent,
and two consumers that ask for the same addresses (for example the recursive
workload iteration and the event-driven simulator) consume identical
variates.

Each variate consumes exactly one 64-bit uniform, which keeps the counter
arithmetic trivial (Philox emits four 64-bit words per counter tick).
"""

from dataclasses import dataclass, field

import numpy as np

# Variate kinds: one sub-stream per model input so that skipping or reusing
# one kind never shifts another.
KIND_TAU = 0
KIND_SIGMA = 1
KIND_DEADLINE = 2
KIND_VACATION = 3

_WORDS_PER_TICK = 4


def _generator_at(seed: int, path: int, kind: int, start: int) -> np.random.Generator:
    bg = np.random.Philox(np.random.SeedSequence((int(seed), int(path), int(kind))))
    ticks, rem = divmod(int(start), _WORDS_PER_TICK)
    if ticks:
        bg.advance(ticks)
    gen = np.random.Generator(bg)
    if rem:
        gen.random(rem)
    return gen


def uniforms(seed: int, path: int, kind: int, start: int, count: int) -> np.ndarray:
    """Uniform(0,1) draws with absolute indices [start, start+count)."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    return _generator_at(seed, path, kind, start).random(count)


@dataclass
class RandomStream:
    """Single-owner handle onto one (seed, path, kind) stream.

    Mutable: the counter advances with every draw.  Do not share between
    threads; spawn one handle per consumer instead.
    """

    seed: int
    path: int = 0
    kind: int = 0
    counter: int = field(default=0)

    def next_uniforms(self, n: int) -> np.ndarray:
        u = uniforms(self.seed, self.path, self.kind, self.counter, n)
        self.counter += n
        return u

    def next_uniform(self) -> float:
        return float(self.next_uniforms(1)[0])
