"""Seeded uniform streams shared by the simulator and the learners.

Every run derives two independent PCG64 streams from its integer seed, one for
arrivals and one for the agent's randomisation.  Both the pure-Python agents
and the compiled training loop read the same streams in the same order, so
they produce identical trajectories.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "numpy.random.PCG64 via SeedSequence(seed).spawn(2) [env, agent]"

# uniforms consumed by one call to an agent's select()
AGENT_DRAWS_PER_STEP = 2


def spawn_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    env_seq, agent_seq = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(env_seq)), np.random.Generator(np.random.PCG64(agent_seq))


class UniformStream:
    """Buffered ``U[0, 1)`` draws from a numpy ``Generator``.

    ``next()`` and ``take(n)`` read the same underlying sequence, so mixing
    them never changes which numbers come out.
    """

    def __init__(self, rng: np.random.Generator | int, block: int = 4096):
        if not isinstance(rng, np.random.Generator):
            rng = np.random.Generator(np.random.PCG64(int(rng)))
        self.rng = rng
        self.block = block
        self._buf = np.empty(0)
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.rng.random(self.block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def take(self, n: int) -> np.ndarray:
        left = self._buf[self._pos:]
        if n <= len(left):
            self._pos += n
            return left[:n].copy()
        self._buf = np.empty(0)
        self._pos = 0
        return np.concatenate([left, self.rng.random(n - len(left))])
