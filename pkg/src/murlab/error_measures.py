"""State-dependent rms error and disturbance, general and direct-test forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import (
    DiscreteObservable,
    Instrument,
    commute_check,
    distorted_observable,
    lueders_instrument,
)
from .qcore import TOL_HERM, TOL_PSD, PreconditionError, QuantumState, sqrt_above_roundoff


@dataclass(frozen=True)
class JointDistribution:
    """Probability weights on value pairs ``(x, y)``."""

    pairs: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.pairs) != len(self.weights):
            raise ValueError("one weight per value pair required")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -TOL_PSD):
            raise ValueError("joint distribution has negative weights")
        if abs(w.sum() - 1) > TOL_HERM:
            raise ValueError(f"joint distribution sums to {w.sum():.15g}")
        object.__setattr__(self, "pairs", tuple((float(x), float(y)) for x, y in self.pairs))
        object.__setattr__(self, "weights", tuple(float(max(v, 0.0)) for v in w))

    def items(self):
        return zip(self.pairs, self.weights)

    def marginal(self, axis: int) -> dict[float, float]:
        out: dict[float, float] = {}
        for pair, w in self.items():
            out[pair[axis]] = out.get(pair[axis], 0.0) + w
        return out

    def as_table(self, row_values, col_values) -> np.ndarray:
        """Weights arranged as a matrix indexed by the given value lists."""
        t = np.zeros((len(row_values), len(col_values)))
        rows = {v: i for i, v in enumerate(row_values)}
        cols = {v: j for j, v in enumerate(col_values)}
        for (x, y), w in self.items():
            t[rows[x], cols[y]] += w
        return t


@dataclass(frozen=True)
class QuasiDistribution:
    """Real weights on values that sum to one but may be negative."""

    values: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.weights):
            raise ValueError("one weight per value required")
        if abs(sum(self.weights) - 1) > TOL_HERM:
            raise ValueError(f"quasi-distribution sums to {sum(self.weights):.15g}")

    @property
    def has_negative(self) -> bool:
        return any(w < -TOL_HERM for w in self.weights)

    def weight(self, value: float) -> float:
        for v, w in zip(self.values, self.weights):
            if abs(v - value) <= 1e-12:
                return w
        return 0.0

    def second_moment(self) -> float:
        return float(sum(v * v * w for v, w in zip(self.values, self.weights)))


def rms_of(j: JointDistribution) -> float:
    """Root mean squared difference of the paired values."""
    sq = sum((x - y) ** 2 * w for (x, y), w in j.items())
    spread = max(abs(x - y) for x, y in j.pairs)
    return sqrt_above_roundoff(sq, spread**2)


def _check_sharp(a: DiscreteObservable, name: str):
    if not a.is_sharp():
        raise PreconditionError(f"{name} must be a sharp observable")


def _clamped_sqrt(sq: float, spread: float) -> float:
    if sq < -TOL_PSD:
        raise ArithmeticError(f"squared deviation {sq:.3g} is negative beyond round-off")
    return sqrt_above_roundoff(sq, spread**2)


def _spread(a: DiscreteObservable, c: DiscreteObservable) -> float:
    return max(abs(x - y) for x in a.values for y in c.values)


def _formal_rms_sq(rho: QuantumState, a: DiscreteObservable, c: DiscreteObservable) -> float:
    if a.dim != rho.dim or c.dim != rho.dim:
        raise ValueError("state and observable dimensions differ")
    m = rho.matrix
    total = 0.0
    for ak, ek in zip(a.values, a.effects):
        rho_a = m @ ek
        for cl, fl in zip(c.values, c.effects):
            # individual terms may be negative when the effects do not commute
            total += (ak - cl) ** 2 * np.einsum("ij,ji->", rho_a, fl).real
    return float(total)


def epsilon_general(rho: QuantumState, a: DiscreteObservable, c: DiscreteObservable) -> float:
    """rms error of ``c`` as an approximation of the sharp ``a`` in ``rho``.

    Sums ``(a_k - c_l)^2 Re tr(rho A_k C_l)`` over all outcome pairs.  When
    ``a`` and ``c`` do not commute the value is only a formal quantity.
    """
    _check_sharp(a, "target observable")
    return _clamped_sqrt(_formal_rms_sq(rho, a, c), _spread(a, c))


def eta_general(rho: QuantumState, b: DiscreteObservable, d: DiscreteObservable) -> float:
    """rms disturbance of the sharp ``b`` into ``d``; same sum as ``epsilon_general``."""
    _check_sharp(b, "disturbed observable")
    return _clamped_sqrt(_formal_rms_sq(rho, b, d), _spread(b, d))


def epsilon_direct(
    rho: QuantumState, a: DiscreteObservable, c: DiscreteObservable
) -> tuple[float, JointDistribution]:
    """Value-comparison error from a Lueders ``a`` measurement followed by ``c``.

    The joint outcome distribution is ``P(a_k, c_l) = tr(rho A_k C_l)``,
    obtained here by collapsing ``rho`` with the Lueders instrument of ``a``
    and then reading ``c``.
    """
    _check_sharp(a, "target observable")
    if not commute_check(a, c):
        raise PreconditionError("direct error test is not applicable: target and approximator do not commute")
    first = lueders_instrument(a)
    pairs, weights = [], []
    for k, ak in enumerate(a.values):
        post = first.apply(k, rho.matrix)
        for cl, fl in zip(c.values, c.effects):
            pairs.append((ak, cl))
            weights.append(np.einsum("ij,ji->", post, fl).real)
    j = JointDistribution(tuple(pairs), tuple(weights))
    return rms_of(j), j


def eta_direct(
    rho: QuantumState, b: DiscreteObservable, inst: Instrument
) -> tuple[float, JointDistribution]:
    """Disturbance read off from sharp ``b`` measurements before and after ``inst``.

    The sequence is: Lueders measurement of ``b`` (outcome ``b_k``), the
    instrument with its outcome discarded, then a sharp ``b`` reading
    (outcome ``b_l``).  Both indices carry ``b``'s values.
    """
    _check_sharp(b, "disturbed observable")
    d = distorted_observable(inst, b)
    if not commute_check(b, d):
        raise PreconditionError("direct disturbance test needs a benign disturbance: distorted observable does not commute")
    first = lueders_instrument(b)
    pairs, weights = [], []
    for k, bk in enumerate(b.values):
        post = inst.channel(first.apply(k, rho.matrix))
        for bl, el in zip(b.values, b.effects):
            pairs.append((bk, bl))
            weights.append(np.einsum("ij,ji->", post, el).real)
    j = JointDistribution(tuple(pairs), tuple(weights))
    return rms_of(j), j


def is_faithful(a: DiscreteObservable, c: DiscreteObservable) -> bool:
    """Whether the rms expressions have a genuine probabilistic meaning for this pair."""
    return commute_check(a, c)
