"""Monte-Carlo estimates of termination probabilities under fixed strategies.

Plays of the global game are sampled directly: a state is a call stack of
boxes plus a vertex.  Entering a call port ``(b,en)`` pushes ``b`` and moves
to ``en``; reaching an exit with a nonempty stack pops ``b`` and moves to the
return port ``(b,ex)``.  A play terminates when it reaches an exit with an
empty stack.  None of this touches the equation machinery, so it serves as an
independent check on the solvers.

Runs hitting the step cap count as non-terminating.  So do runs that are
provably stuck, reported separately as ``dead``: they reached a vertex
without successors, fell into the missing mass of a substochastic vertex,
or entered a region of one component from which no exit or call port is
reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .equations import RsmStrategy, StrategyError
from .model import Rcsg, VertexKind

DEFAULT_SAMPLES = 100_000
DEFAULT_MAX_STEPS = 10_000

_EXIT, _STEP, _CALL, _NOSTRAT, _TRAP = range(5)
TERMINATED, CENSORED, DEAD, MISSING = range(4)


class Outcome(str, Enum):
    TERMINATED = "terminated"
    CENSORED = "censored"
    DEAD = "dead"


@dataclass
class _Chain:
    """The model with both strategies fixed, as flat arrays."""

    names: tuple[str, ...]
    kind: np.ndarray
    ptr: np.ndarray  # successors of vertex i: ptr[i]:ptr[i+1]
    cum: np.ndarray  # cumulative probabilities
    succ: np.ndarray
    call_entry: np.ndarray
    call_return: np.ndarray


def compile_chain(model: Rcsg, sigma: RsmStrategy, tau: RsmStrategy) -> _Chain:
    names = tuple(model.vertices)
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)
    kind = np.full(n, _STEP, dtype=np.int64)
    call_entry = np.full(n, -1, dtype=np.int64)
    call_return = np.full(n, -1, dtype=np.int64)
    ptr = [0]
    cum: list[float] = []
    succ: list[int] = []
    for i, u in enumerate(names):
        v = model.vertices[u]
        dist: dict[int, float] = {}
        if v.kind is VertexKind.EXIT:
            kind[i] = _EXIT
        elif v.kind is VertexKind.CALL:
            kind[i] = _CALL
            call_entry[i] = idx[v.port_node]
            call_return[i] = idx[model.return_port_of(u)]
        elif v.is_play:
            s, t = sigma.get(u), tau.get(u)
            if s is None or t is None:
                kind[i] = _NOSTRAT
            else:
                for tr in model.out_transitions(u):
                    p = s.prob(tr.moves[0]) * t.prob(tr.moves[1])
                    if p > 0:
                        dist[idx[tr.target]] = dist.get(idx[tr.target], 0.0) + p
        else:
            for tr in model.out_transitions(u):
                if tr.prob > 0:
                    dist[idx[tr.target]] = dist.get(idx[tr.target], 0.0) + float(tr.prob)
        acc = 0.0
        for j, p in dist.items():
            acc += p
            cum.append(acc)
            succ.append(j)
        if dist and abs(acc - 1.0) < 1e-9:
            cum[-1] = 1.0  # full distributions never fall through to ``dead``
        ptr.append(len(succ))
    for i in _traps(kind, ptr, succ):
        kind[i] = _TRAP
    return _Chain(
        names,
        kind,
        np.asarray(ptr, dtype=np.int64),
        np.asarray(cum, dtype=np.float64),
        np.asarray(succ, dtype=np.int64),
        call_entry,
        call_return,
    )


def _traps(kind, ptr, succ) -> list[int]:
    """Vertices that can reach neither an exit nor a call port.

    Plays there wander inside one component forever, so they are stopped
    at once and counted as dead instead of running into the step cap.
    """
    n = len(kind)
    preds: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in succ[ptr[i]:ptr[i + 1]]:
            preds[j].append(i)
    live = {i for i in range(n) if kind[i] in (_EXIT, _CALL, _NOSTRAT)}
    work = list(live)
    while work:
        j = work.pop()
        for i in preds[j]:
            if i not in live:
                live.add(i)
                work.append(i)
    return [i for i in range(n) if i not in live]


@njit(cache=True)
def _run(start, max_steps, stack, kind, ptr, cum, succ, call_entry, call_return):
    """One play; returns (outcome, steps, vertex where it ended, max depth)."""
    u = start
    depth = 0
    deepest = 0
    for steps in range(max_steps + 1):
        k = kind[u]
        if k == _EXIT:
            if depth == 0:
                return TERMINATED, steps, u, deepest
            if steps == max_steps:
                break
            depth -= 1
            u = stack[depth]
        elif steps == max_steps:
            break
        elif k == _CALL:
            stack[depth] = call_return[u]
            depth += 1
            if depth > deepest:
                deepest = depth
            u = call_entry[u]
        elif k == _NOSTRAT:
            return MISSING, steps, u, deepest
        elif k == _TRAP:
            return DEAD, steps, u, deepest
        else:
            lo, hi = ptr[u], ptr[u + 1]
            r = np.random.random()
            nxt = -1
            for j in range(lo, hi):
                if r < cum[j]:
                    nxt = succ[j]
                    break
            if nxt < 0:
                return DEAD, steps, u, deepest
            u = nxt
    return CENSORED, max_steps, u, deepest


@njit(cache=True)
def _batch(start, samples, max_steps, seed, counts, kind, ptr, cum, succ, call_entry, call_return):
    np.random.seed(seed)
    stack = np.empty(max_steps + 1, dtype=np.int64)
    deepest = 0
    for _ in range(samples):
        out, _, where, d = _run(start, max_steps, stack, kind, ptr, cum, succ, call_entry, call_return)
        if out == MISSING:
            return where, deepest
        counts[out] += 1
        if d > deepest:
            deepest = d
    return -1, deepest


def _arrays(ch: _Chain):
    return ch.kind, ch.ptr, ch.cum, ch.succ, ch.call_entry, ch.call_return


def _check(model: Rcsg, start: str, max_steps: int):
    model.vertex(start)
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class PlayResult:
    outcome: Outcome
    steps: int
    max_depth: int


def sample_play(model: Rcsg, sigma: RsmStrategy, tau: RsmStrategy, start: str,
                max_steps: int = DEFAULT_MAX_STEPS, rng_seed: int = 0) -> PlayResult:
    _check(model, start, max_steps)
    ch = compile_chain(model, sigma, tau)
    stack = np.empty(max_steps + 1, dtype=np.int64)
    _seed(rng_seed)
    out, steps, where, depth = _run(ch.names.index(start), max_steps, stack, *_arrays(ch))
    if out == MISSING:
        raise StrategyError(f"no strategy for play vertex {ch.names[where]!r}")
    return PlayResult(Outcome(("terminated", "censored", "dead")[out]), int(steps), int(depth))


@njit(cache=True)
def _seed_kernel(seed):
    np.random.seed(seed)


def _seed(seed: int):
    _seed_kernel(np.uint32(seed % 2**32))


@dataclass(frozen=True)
class SimEstimate:
    samples: int
    terminated: int
    step_censored: int
    dead: int
    estimate: float
    stderr: float
    max_depth: int

    def __str__(self):
        return f"{self.estimate:.6f} +- {self.stderr:.6f} ({self.terminated}/{self.samples} terminated, {self.step_censored} censored)"


def estimate_termination(model: Rcsg, sigma: RsmStrategy, tau: RsmStrategy, start: str,
                         samples: int = DEFAULT_SAMPLES, max_steps: int = DEFAULT_MAX_STEPS,
                         rng_seed: int = 0) -> SimEstimate:
    """Fraction of ``samples`` independent plays from ``start`` that terminate."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    _check(model, start, max_steps)
    ch = compile_chain(model, sigma, tau)
    counts = np.zeros(3, dtype=np.int64)
    where, depth = _batch(ch.names.index(start), samples, max_steps, np.uint32(rng_seed % 2**32),
                          counts, *_arrays(ch))
    if where >= 0:
        raise StrategyError(f"no strategy for play vertex {ch.names[where]!r}")
    term = int(counts[TERMINATED])
    est = term / samples
    return SimEstimate(samples, term, int(counts[CENSORED]), int(counts[DEAD]), est,
                       math.sqrt(est * (1 - est) / samples), int(depth))
