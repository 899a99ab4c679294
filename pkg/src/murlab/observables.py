"""Discrete observables (POVMs), smearings and instruments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    TOL_HERM,
    TOL_PSD,
    PreconditionError,
    as_operator,
    bloch_to_effect,
    commutator_norm,
    is_hermitian,
    is_positive,
    is_projector,
)

MERGE_TOL = 1e-9


def _freeze(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    a.setflags(write=False)
    return a


def is_povm(effects: Sequence[np.ndarray], tol_psd: float = TOL_PSD, tol_sum: float = TOL_HERM) -> bool:
    """Every effect positive and the effects summing to the identity."""
    effects = [np.asarray(e) for e in effects]
    if not effects:
        return False
    d = effects[0].shape[0]
    if not all(is_positive(e, tol_psd) for e in effects):
        return False
    return bool(np.max(np.abs(sum(effects) - np.eye(d))) <= tol_sum)


@dataclass(frozen=True)
class DiscreteObservable:
    """Finitely many real outcomes, each carrying a positive effect.

    Outcomes whose values lie within ``MERGE_TOL`` of each other are merged
    on construction and the result is kept sorted by value.
    """

    values: tuple[float, ...]
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        values = [float(v) for v in self.values]
        effects = [as_operator(e) for e in self.effects]
        if len(values) != len(effects) or not values:
            raise ValueError("need one effect per value and at least one outcome")
        if not all(np.isfinite(values)):
            raise ValueError("outcome values must be finite")
        if len({e.shape for e in effects}) != 1:
            raise ValueError("effects have differing dimensions")

        order = np.argsort(values, kind="stable")
        merged_v: list[float] = []
        merged_e: list[np.ndarray] = []
        for i in order:
            if merged_v and abs(values[i] - merged_v[-1]) <= MERGE_TOL:
                merged_e[-1] = merged_e[-1] + effects[i]
            else:
                merged_v.append(values[i])
                merged_e.append(effects[i].copy())

        if not all(is_positive(e) for e in merged_e):
            raise ValueError("effects must be positive semidefinite")
        d = merged_e[0].shape[0]
        if np.max(np.abs(sum(merged_e) - np.eye(d))) > TOL_HERM:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "values", tuple(merged_v))
        object.__setattr__(self, "effects", tuple(_freeze(e) for e in merged_e))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.values)

    def is_sharp(self, tol: float = TOL_PSD) -> bool:
        return all(is_projector(e, tol) for e in self.effects)

    def operator(self) -> np.ndarray:
        """First moment operator ``sum_k value_k * effect_k``."""
        return sum(v * e for v, e in zip(self.values, self.effects))

    def probabilities(self, rho) -> np.ndarray:
        m = getattr(rho, "matrix", rho)
        return np.array([np.einsum("ij,ji->", m, e).real for e in self.effects])


@dataclass(frozen=True)
class Instrument:
    """Outcome-indexed completely positive maps in Kraus form.

    ``kraus[n]`` is the Kraus list of the operation for outcome
    ``values[n]``.  The operations sum to a trace-preserving channel.
    """

    values: tuple[float, ...]
    kraus: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        if len(self.values) != len(self.kraus) or not self.values:
            raise ValueError("need one Kraus list per outcome value")
        kraus = tuple(tuple(_freeze(as_operator(k)) for k in ks) for ks in self.kraus)
        if any(len(ks) == 0 for ks in kraus):
            raise ValueError("each outcome needs at least one Kraus operator")
        dims = {k.shape for ks in kraus for k in ks}
        if len(dims) != 1:
            raise ValueError("Kraus operators have differing dimensions")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "kraus", kraus)
        if not self.is_trace_preserving():
            raise ValueError("Kraus operators do not sum to a trace-preserving channel")

    @property
    def dim(self) -> int:
        return self.kraus[0][0].shape[0]

    def is_trace_preserving(self, tol: float = TOL_HERM) -> bool:
        total = sum(k.conj().T @ k for ks in self.kraus for k in ks)
        return bool(np.max(np.abs(total - np.eye(self.dim))) <= tol)

    def apply(self, n: int, rho: np.ndarray) -> np.ndarray:
        """Unnormalized post-measurement state for outcome index ``n``."""
        rho = getattr(rho, "matrix", rho)
        return sum(k @ rho @ k.conj().T for k in self.kraus[n])

    def channel(self, rho: np.ndarray) -> np.ndarray:
        """Outcome-averaged state change."""
        return sum(self.apply(n, rho) for n in range(len(self.kraus)))

    def dual(self, n: int, effect: np.ndarray) -> np.ndarray:
        """Heisenberg-picture image of ``effect`` under operation ``n``."""
        return sum(k.conj().T @ effect @ k for k in self.kraus[n])

    def observable(self) -> DiscreteObservable:
        """The POVM whose statistics the instrument reproduces."""
        eye = np.eye(self.dim)
        return DiscreteObservable(self.values, tuple(self.dual(n, eye) for n in range(len(self.values))))


def sharp_observable(h: np.ndarray) -> DiscreteObservable:
    """Spectral measure of a Hermitian operator."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise PreconditionError("sharp_observable needs a Hermitian operator")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    values: list[float] = []
    projectors: list[np.ndarray] = []
    for i, lam in enumerate(w):
        p = np.outer(v[:, i], v[:, i].conj())
        if values and abs(lam - values[-1]) <= MERGE_TOL:
            projectors[-1] = projectors[-1] + p
        else:
            values.append(float(lam))
            projectors.append(p)
    return DiscreteObservable(tuple(values), tuple(projectors))


def qubit_observable(c, values: tuple[float, float] = (1.0, -1.0)) -> DiscreteObservable:
    """Two-outcome qubit observable with effects ``(1 +/- c.sigma) / 2``."""
    return DiscreteObservable(values, (bloch_to_effect(c, 1), bloch_to_effect(c, -1)))


def trivial_observable(dim: int = 2, value: float = 0.0) -> DiscreteObservable:
    return DiscreteObservable((value,), (np.eye(dim),))


def check_stochastic(lam: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 2:
        raise ValueError("stochastic matrix must be two-dimensional")
    if np.any(lam < -tol):
        raise ValueError("stochastic matrix has negative entries")
    if np.max(np.abs(lam.sum(axis=0) - 1)) > tol:
        raise ValueError("stochastic matrix columns must sum to 1")
    return lam


def smear(b: DiscreteObservable, lam: np.ndarray, values: Sequence[float] | None = None) -> DiscreteObservable:
    """Post-process ``b`` with a column-stochastic matrix.

    Output effect ``l`` is ``sum_m lam[l, m] * B_m``.  The output values
    default to ``b``'s values, which requires ``lam`` to be square.
    """
    lam = check_stochastic(lam)
    if lam.shape[1] != len(b):
        raise ValueError(f"stochastic matrix has {lam.shape[1]} columns, observable has {len(b)} outcomes")
    if values is None:
        if lam.shape[0] != len(b):
            raise ValueError("non-square smearing needs explicit output values")
        values = b.values
    if len(values) != lam.shape[0]:
        raise ValueError("one output value per stochastic-matrix row required")
    effects = [np.tensordot(lam[l], np.stack(b.effects), axes=1) for l in range(lam.shape[0])]
    out = DiscreteObservable(tuple(values), tuple(effects))
    if b.is_sharp():
        assert commute_check(b, out), "smearing of a sharp observable must commute with it"
    return out


def lueders_instrument(a: DiscreteObservable) -> Instrument:
    """Projective measurement ``rho -> A_k rho A_k``."""
    if not a.is_sharp():
        raise PreconditionError("Lueders instrument is only provided for sharp observables")
    return Instrument(a.values, tuple((e,) for e in a.effects))


def identity_instrument(dim: int = 2, value: float = 0.0) -> Instrument:
    """Single-outcome instrument that leaves every state untouched."""
    return Instrument((value,), ((np.eye(dim),),))


def distorted_observable(inst: Instrument, b: DiscreteObservable) -> DiscreteObservable:
    """Observable measured by a sharp ``b`` reading after ``inst``, outcomes of ``inst`` ignored."""
    if inst.dim != b.dim:
        raise ValueError("instrument and observable dimensions differ")
    if not inst.is_trace_preserving():
        raise PreconditionError("instrument is not trace preserving")
    effects = [sum(inst.dual(n, e) for n in range(len(inst.values))) for e in b.effects]
    return DiscreteObservable(b.values, tuple(effects))


def commute_check(x: DiscreteObservable, y: DiscreteObservable, tol: float = TOL_HERM) -> bool:
    if x.dim != y.dim:
        raise ValueError("observable dimensions differ")
    return all(commutator_norm(e, f) <= tol for e in x.effects for f in y.effects)
