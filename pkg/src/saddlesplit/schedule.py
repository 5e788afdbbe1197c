"""Block activation sets, bounded lags and the iterate history.

A :class:`Schedule` decides which primal blocks ``I_n`` and dual blocks
``K_n`` are processed at iteration ``n`` and which past iterate each block
reads. Two guarantees hold for every policy:

* ``I_0 = I``, ``K_0 = K`` and every window ``[n, n + P]`` covers all blocks;
* every lag ``m`` satisfies ``max(0, n - T) <= m <= n``.

Asynchrony is replayed deterministically: the solver keeps the last
``T + 1`` iterates in a :class:`HistoryBuffer` and reads lagged values there.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

__all__ = [
    "Schedule",
    "HistoryBuffer",
    "ScheduleError",
    "blocks_at",
    "lag_at",
    "verify",
    "POLICIES",
    "LAG_POLICIES",
]

POLICIES = ("full", "round_robin", "random_covering")
LAG_POLICIES = ("zero", "fixed", "random")

_LAG_CHUNK = 1024


class ScheduleError(ValueError):
    pass


class Schedule:
    """Activation and lag policy over primal labels ``I`` and dual labels ``K``.

    Parameters
    ----------
    I, K : sequence of str
        Primal and dual block labels.
    P : int
        Coverage window; every ``P + 1`` consecutive iterations touch every
        block.
    T : int
        Largest allowed lag.
    policy : {'full', 'round_robin', 'random_covering'}
    lag_policy : {'zero', 'fixed', 'random'}
    seed : int
        Seed for the random policies.
    lag : int, optional
        Delay used by ``lag_policy='fixed'``; defaults to ``T``.
    chunks_I, chunks_K : list of list of str, optional
        Explicit round-robin groups. At most ``P + 1`` groups, jointly
        covering the labels.
    density : float
        Inclusion probability of each block under ``random_covering``.
    """

    def __init__(self, I: Sequence[str], K: Sequence[str], *, P: int = 0,
                 T: int = 0, policy: str = "full", lag_policy: str = "zero",
                 seed: int = 0, lag: int | None = None, chunks_I=None,
                 chunks_K=None, density: float = 0.5):
        self.I = tuple(I)
        self.K = tuple(K)
        if not self.I or not self.K:
            raise ScheduleError("schedule needs nonempty I and K")
        P, T = int(P), int(T)
        if P < 0 or T < 0:
            raise ScheduleError(f"P and T must be >= 0, got P={P}, T={T}")
        if policy not in POLICIES:
            raise ScheduleError(f"unknown policy {policy!r}; "
                                f"choose from {POLICIES}")
        if lag_policy not in LAG_POLICIES:
            raise ScheduleError(f"unknown lag policy {lag_policy!r}; "
                                f"choose from {LAG_POLICIES}")
        if not 0.0 <= density <= 1.0:
            raise ScheduleError(f"density must lie in [0, 1], got {density}")
        self.P, self.T = P, T
        self.policy = policy
        self.lag_policy = lag_policy
        self.seed = int(seed)
        self.density = float(density)
        if lag_policy == "fixed":
            lag = T if lag is None else int(lag)
            if not 0 <= lag <= T:
                raise ScheduleError(f"fixed lag {lag} outside [0, T={T}]")
        self.lag = 0 if lag is None else int(lag)

        self._chunks_I = self._make_chunks(self.I, chunks_I, "I")
        self._chunks_K = self._make_chunks(self.K, chunks_K, "K")
        self._index = {("primal", lab): j for j, lab in enumerate(self.I)}
        self._index.update({("dual", lab): len(self.I) + j
                            for j, lab in enumerate(self.K)})
        # random_covering state, extended lazily and in order
        self._rng = np.random.default_rng([self.seed, 0])
        self._seq: list[tuple[frozenset, frozenset]] = []
        self._last_I = {lab: 0 for lab in self.I}
        self._last_K = {lab: 0 for lab in self.K}
        self._lag_cache: dict[tuple[int, int], np.ndarray] = {}

    def _make_chunks(self, labels, chunks, name):
        if chunks is None:
            count = min(self.P + 1, len(labels))
            return [tuple(labels[j] for j in part)
                    for part in np.array_split(np.arange(len(labels)), count)]
        chunks = [tuple(c) for c in chunks]
        if not chunks or any(len(c) == 0 for c in chunks):
            raise ScheduleError(f"round-robin groups for {name} must be "
                                f"nonempty")
        if len(chunks) > self.P + 1:
            raise ScheduleError(
                f"{len(chunks)} round-robin groups for {name} cannot cover "
                f"a window of P + 1 = {self.P + 1} iterations")
        flat = [lab for c in chunks for lab in c]
        if set(flat) != set(labels) or not set(flat) <= set(labels):
            raise ScheduleError(f"round-robin groups for {name} must cover "
                                f"exactly {list(labels)}")
        return chunks

    # activation -----------------------------------------------------------

    def blocks_at(self, n: int) -> tuple[frozenset, frozenset]:
        if n < 0:
            raise ValueError(f"iteration index must be >= 0, got {n}")
        if n == 0 or self.policy == "full":
            return frozenset(self.I), frozenset(self.K)
        if self.policy == "round_robin":
            ci = self._chunks_I[(n - 1) % len(self._chunks_I)]
            ck = self._chunks_K[(n - 1) % len(self._chunks_K)]
            return frozenset(ci), frozenset(ck)
        while len(self._seq) < n:
            self._extend()
        return self._seq[n - 1]

    def _draw(self, labels, last, n):
        mask = self._rng.random(len(labels)) < self.density
        chosen = {lab for lab, m in zip(labels, mask) if m}
        # a block idle since iteration n - P - 1 must be taken now
        chosen |= {lab for lab in labels if n - last[lab] > self.P}
        if not chosen:
            chosen = {labels[int(self._rng.integers(len(labels)))]}
        for lab in chosen:
            last[lab] = n
        return frozenset(chosen)

    def _extend(self):
        n = len(self._seq) + 1
        sI = self._draw(self.I, self._last_I, n)
        sK = self._draw(self.K, self._last_K, n)
        self._seq.append((sI, sK))

    # lags -----------------------------------------------------------------

    def lag_at(self, which: tuple[str, str], n: int) -> int:
        """Iteration read by block ``which = ('primal'|'dual', label)``."""
        if n < 0:
            raise ValueError(f"iteration index must be >= 0, got {n}")
        if which not in self._index:
            raise KeyError(f"unknown block {which!r}")
        if self.lag_policy == "zero" or self.T == 0:
            return n
        if self.lag_policy == "fixed":
            return max(0, n - self.lag)
        idx = self._index[which]
        chunk, pos = divmod(n, _LAG_CHUNK)
        key = (idx, chunk)
        draws = self._lag_cache.get(key)
        if draws is None:
            rng = np.random.default_rng([self.seed, 1, idx, chunk])
            draws = rng.integers(0, self.T + 1, size=_LAG_CHUNK)
            if len(self._lag_cache) > 4 * len(self._index):
                self._lag_cache.clear()
            self._lag_cache[key] = draws
        return max(0, n - int(draws[pos]))

    def describe(self) -> dict:
        return {"policy": self.policy, "P": self.P, "T": self.T,
                "lag_policy": self.lag_policy, "lag": self.lag,
                "seed": self.seed}

    def __repr__(self):
        return f"Schedule({self.describe()})"


def blocks_at(sched: Schedule, n: int) -> tuple[frozenset, frozenset]:
    """Active primal and dual blocks at iteration ``n``."""
    return sched.blocks_at(n)


def lag_at(sched: Schedule, which: tuple[str, str], n: int) -> int:
    """Iteration index whose state block ``which`` reads at iteration ``n``."""
    return sched.lag_at(which, n)


def verify(sched: Schedule, horizon: int) -> list[str]:
    """Brute-force check of coverage and lag bounds for ``n < horizon``."""
    out = []
    sets = [sched.blocks_at(n) for n in range(horizon + sched.P)]
    if sets[0] != (frozenset(sched.I), frozenset(sched.K)):
        out.append("iteration 0 does not activate every block")
    for n in range(horizon):
        window = sets[n:n + sched.P + 1]
        cov_I = frozenset().union(*(s[0] for s in window))
        cov_K = frozenset().union(*(s[1] for s in window))
        if cov_I != frozenset(sched.I) or cov_K != frozenset(sched.K):
            out.append(f"window starting at {n} misses blocks")
        if not sets[n][0] or not sets[n][1]:
            out.append(f"empty activation set at {n}")
        for which in [("primal", i) for i in sched.I] + [("dual", k)
                                                         for k in sched.K]:
            m = sched.lag_at(which, n)
            if not max(0, n - sched.T) <= m <= n:
                out.append(f"lag {m} of {which} at {n} out of bounds")
    return out


class HistoryBuffer:
    """The last ``T + 1`` iterates, addressed by iteration number."""

    def __init__(self, T: int):
        self.T = int(T)
        self._items: deque[tuple[int, np.ndarray]] = deque(maxlen=self.T + 1)

    def push(self, n: int, data: np.ndarray):
        if self._items and n != self._items[-1][0] + 1:
            raise ValueError(f"history expects iteration "
                             f"{self._items[-1][0] + 1}, got {n}")
        arr = np.array(data, dtype=float)
        arr.setflags(write=False)
        self._items.append((n, arr))

    @property
    def latest(self) -> int:
        if not self._items:
            raise LookupError("history is empty")
        return self._items[-1][0]

    def get(self, m: int) -> np.ndarray:
        if not self._items:
            raise LookupError("history is empty")
        first = self._items[0][0]
        if not first <= m <= self.latest:
            raise LookupError(f"iteration {m} not held; buffer spans "
                              f"[{first}, {self.latest}]")
        return self._items[m - first][1]

    def __len__(self):
        return len(self._items)
