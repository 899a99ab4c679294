"""Finite-shot emulation of the direct-test protocols.

Random numbers come from numpy's Philox counter-based generator.  Each
``(seed, stream)`` pair maps to an independent substream through
``SeedSequence`` spawn keys, so chunked or parallel sampling is
reproducible regardless of execution order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .error_measures import JointDistribution
from .lund_wiseman import OUTCOMES, OutcomeDistribution8
from .observables import DiscreteObservable, Instrument, lueders_instrument
from .qcore import QuantumState
from .transport import DiscreteDistribution


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ShotRecord:
    columns: tuple[str, ...]
    values: np.ndarray  # shape (N, len(columns))

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise ValueError("shot values must have one column per name")
        if v.shape[0] < 1:
            raise ValueError("a shot record needs at least one shot")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select(self, *names: str, rename: Sequence[str] | None = None) -> "ShotRecord":
        idx = [self.columns.index(c) for c in names]
        return ShotRecord(tuple(rename or names), self.values[:, idx])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["shot_index", *[f"value_{i + 1}" for i in range(len(self.columns))]])
            for i, row in enumerate(self.values):
                w.writerow([i, *[repr(float(x)) for x in row]])

    @classmethod
    def from_csv(cls, path: str | Path, columns: Sequence[str] | None = None) -> "ShotRecord":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[0] != "shot_index":
            raise ValueError("CSV shot record must start with a shot_index column")
        values = np.array([[float(x) for x in r[1:]] for r in body])
        names = tuple(columns) if columns else tuple(header[1:])
        return cls(names, values)


@dataclass(frozen=True)
class Estimate:
    """Plug-in rms estimate; ``squared`` is the sample mean of squared deviations."""

    value: float
    std_error: float
    n: int
    squared: float
    squared_std_error: float


def _outcome_table(d) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    if isinstance(d, OutcomeDistribution8):
        outcomes = np.array(OUTCOMES, dtype=float)
        probs = np.array([d[o] for o in OUTCOMES])
        return ("z_p", "x_f", "z_m"), outcomes, probs
    if isinstance(d, JointDistribution):
        return ("x", "y"), np.array(d.pairs, dtype=float), np.array(d.weights)
    if isinstance(d, DiscreteDistribution):
        return ("value",), np.array(d.values, dtype=float)[:, None], np.array(d.weights)
    raise TypeError(f"cannot sample from {type(d).__name__}")


def _draw(probs: np.ndarray, n: int, seed: int, stream: int) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    return make_rng(seed, stream).choice(len(p), size=n, p=p / p.sum())


def sample_distribution(d, n: int, seed: int, streams: int = 1, workers: int = 1) -> ShotRecord:
    """Draw ``n`` i.i.d. outcomes.

    The shots are split into ``streams`` contiguous chunks, chunk ``i``
    drawn from substream ``i``; ``workers > 1`` draws chunks in threads.
    """
    if n < 1:
        raise ValueError("need at least one shot")
    names, outcomes, probs = _outcome_table(d)
    sizes = [n // streams + (1 if i < n % streams else 0) for i in range(streams)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda i: _draw(probs, sizes[i], seed, i), range(streams)))
    else:
        chunks = [_draw(probs, sizes[i], seed, i) for i in range(streams)]
    idx = np.concatenate(chunks)
    return ShotRecord(names, outcomes[idx])


def _categorical_split(rng: np.random.Generator, counts: int, probs: np.ndarray) -> np.ndarray:
    p = np.clip(probs, 0.0, None)
    total = p.sum()
    if counts == 0 or total <= 0:
        return np.zeros(len(p), dtype=int)
    return rng.multinomial(counts, p / total)


def _expand(groups: list[tuple[tuple[float, ...], int]], width: int) -> np.ndarray:
    if not groups:
        return np.zeros((0, width))
    outcomes = np.array([g[0] for g in groups], dtype=float)
    return np.repeat(outcomes, [int(g[1]) for g in groups], axis=0)


def sandwich_shots(
    rho: QuantumState, b: DiscreteObservable, inst: Instrument, n: int, seed: int, stream: int = 0
) -> ShotRecord:
    """Lueders ``b``, then ``inst``, then sharp ``b``, with the state collapsed at each step.

    Columns are ``(b_i, c, b_f)``: initial value, instrument outcome, final value.
    """
    rng = make_rng(seed, stream)
    first = lueders_instrument(b)
    rows = []
    first_counts = _categorical_split(rng, n, b.probabilities(rho))
    for k, nk in enumerate(first_counts):
        if nk == 0:
            continue
        post_b = first.apply(k, rho.matrix)
        post_b = post_b / np.trace(post_b).real
        mid_probs = np.array([np.trace(inst.apply(c, post_b)).real for c in range(len(inst.values))])
        for c, nc in enumerate(_categorical_split(rng, nk, mid_probs)):
            if nc == 0:
                continue
            post_c = inst.apply(c, post_b)
            post_c = post_c / np.trace(post_c).real
            for l, nl in enumerate(_categorical_split(rng, nc, b.probabilities(post_c))):
                rows.append(((b.values[k], inst.values[c], b.values[l]), nl))
    values = _expand(rows, 3)
    # multinomial splitting groups shots by outcome; shuffle into i.i.d. order
    return ShotRecord(("b_i", "c", "b_f"), values[rng.permutation(n)])


def lueders_then_povm_shots(
    rho: QuantumState, a: DiscreteObservable, c: DiscreteObservable, n: int, seed: int, stream: int = 0
) -> ShotRecord:
    """Lueders ``a`` followed by a ``c`` reading on the collapsed state; columns ``(a, c)``."""
    rng = make_rng(seed, stream)
    first = lueders_instrument(a)
    rows = []
    for k, nk in enumerate(_categorical_split(rng, n, a.probabilities(rho))):
        if nk == 0:
            continue
        post = first.apply(k, rho.matrix)
        post = post / np.trace(post).real
        for l, nl in enumerate(_categorical_split(rng, nk, c.probabilities(post))):
            rows.append(((a.values[k], c.values[l]), nl))
    values = _expand(rows, 2)
    return ShotRecord(("a", "c"), values[rng.permutation(n)])


def _bootstrap_se(sq_dev: np.ndarray, reps: int, seed: int) -> float:
    rng = make_rng(seed, 1_000_003)
    n = len(sq_dev)
    means = np.array([sq_dev[rng.integers(0, n, n)].mean() for _ in range(reps)])
    return float(means.std(ddof=1))


def _rms_estimate(first: np.ndarray, second: np.ndarray, method: str, bootstrap_reps: int, seed: int) -> Estimate:
    n = len(first)
    if n == 0:
        raise ValueError("cannot estimate from zero shots")
    sq_dev = (first - second) ** 2
    mean = float(sq_dev.mean())
    if method == "delta":
        se_sq = float(sq_dev.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    elif method == "bootstrap":
        se_sq = _bootstrap_se(sq_dev, bootstrap_reps, seed) if n > 1 else 0.0
    else:
        raise ValueError(f"unknown standard-error method {method!r}")
    value = float(np.sqrt(mean))
    # delta method for the square root; deterministic when every deviation vanishes
    se = se_sq / (2 * value) if value > 0 else 0.0
    return Estimate(value=value, std_error=se, n=n, squared=mean, squared_std_error=se_sq)


def estimate_eta_direct(
    shots: ShotRecord, method: str = "delta", bootstrap_reps: int = 200, seed: int = 0
) -> Estimate:
    """rms deviation between initial and final sharp ``B`` readings.

    Expects columns ``b_i`` and ``b_f`` (or, for circuit shots taken at
    gamma = 1, ``z_p`` and ``x_f``).
    """
    if "b_i" in shots.columns:
        first, second = shots.column("b_i"), shots.column("b_f")
    else:
        first, second = shots.column("z_p"), shots.column("x_f")
    return _rms_estimate(first, second, method, bootstrap_reps, seed)


def estimate_epsilon_direct(
    shots: ShotRecord, method: str = "delta", bootstrap_reps: int = 200, seed: int = 0
) -> Estimate:
    """rms deviation between the sharp ``A`` reading and the approximator's value."""
    if "a" in shots.columns:
        first, second = shots.column("a"), shots.column("c")
    else:
        first, second = shots.column("x"), shots.column("y")
    return _rms_estimate(first, second, method, bootstrap_reps, seed)
