from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class AliasTable:
    r"""Walker/Vose alias table for O(1) draws from a finite distribution.

    Slot ``i`` is kept with probability ``prob[i]`` and otherwise replaced by
    ``alias[i]``; slots are chosen uniformly. Draws return category indices.

    Parameters
    ----------
    prob : np.ndarray
        Acceptance probability per slot, shape (K,).
    alias : np.ndarray
        Replacement category per slot, shape (K,).
    """

    prob: np.ndarray
    alias: np.ndarray

    @classmethod
    def build(cls, probs: np.ndarray) -> "AliasTable":
        probs = np.asarray(probs, dtype=np.float64)
        K = probs.size
        scaled = probs * K / probs.sum()
        prob = np.ones(K, dtype=np.float64)
        alias = np.arange(K, dtype=np.int64)

        # Sort the outcomes into those with probabilities that are
        # smaller and larger than 1/K.
        smaller = [k for k in range(K) if scaled[k] < 1.0]
        larger = [k for k in range(K) if scaled[k] >= 1.0]
        while smaller and larger:
            small = smaller.pop()
            large = larger.pop()

            prob[small] = scaled[small]
            alias[small] = large
            scaled[large] = (scaled[large] - 1.0) + scaled[small]

            if scaled[large] < 1.0:
                smaller.append(large)
            else:
                larger.append(large)

        # Leftovers are 1 up to rounding.
        for k in smaller + larger:
            prob[k] = 1.0

        prob.setflags(write=False)
        alias.setflags(write=False)
        return cls(prob=prob, alias=alias)

    @property
    def size(self) -> int:
        return int(self.prob.size)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        r"""Draw category indices.

        Parameters
        ----------
        rng : np.random.Generator
            Random stream, owned by the caller.
        size : int, optional
            Number of draws. ``None`` returns a 0-d array.

        Returns
        -------
        np.ndarray
            Integer category indices.
        """
        slot = rng.integers(0, self.size, size=size)
        keep = rng.random(size=size) < self.prob[slot]
        return np.where(keep, slot, self.alias[slot])


class DrawBuffer:
    r"""Buffered alias draws served one at a time as Python ints.

    Inner simulation loops draw a handful of values per step; drawing them in
    large vectorized batches and serving from a list avoids per-step array
    overhead. Batches start small and double up to ``max_batch`` so that short
    runs do not pay for draws they never use. The draw sequence is a
    deterministic function of the stream.
    """

    def __init__(
        self,
        table: AliasTable,
        rng: np.random.Generator,
        values: np.ndarray | None = None,
        batch: int = 64,
        max_batch: int = 4096,
    ) -> None:
        self.table = table
        self.rng = rng
        self.values = values
        self.batch = batch
        self.max_batch = max_batch
        self._buf: list = []
        self._pos = 0

    def _refill(self) -> None:
        idx = self.table.sample(self.rng, self.batch)
        self._buf = (self.values[idx] if self.values is not None else idx).tolist()
        self._pos = 0
        self.batch = min(2 * self.batch, self.max_batch)

    def next(self):
        if self._pos >= len(self._buf):
            self._refill()
        v = self._buf[self._pos]
        self._pos += 1
        return v
