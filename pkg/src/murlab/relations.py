"""Qubit closed forms and the Z/X measurement uncertainty inequalities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .observables import DiscreteObservable, Instrument, distorted_observable, is_povm, sharp_observable
from .qcore import TOL_HERM, TOL_PSD, X, bloch_coefficients

SLACK = 1e-9
ADDITIVE_BOUND = 2 - np.sqrt(2)
Z_AXIS = np.array([0.0, 0.0, 1.0])
X_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class ErrorPair:
    d_z: float
    d_x: float
    label: str = ""

    def __post_init__(self):
        for v in (self.d_z, self.d_x):
            if not np.isfinite(v) or v < -TOL_HERM:
                raise ValueError("distances must be finite and nonnegative")

    @property
    def outside_region(self) -> bool:
        """Flag for pairs beyond the region of interest ``d <= 1``."""
        return self.d_z > 1 + SLACK or self.d_x > 1 + SLACK


def _unit(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if abs(np.linalg.norm(a) - 1) > TOL_PSD:
        raise ValueError("target Bloch vector must be a unit vector")
    return a


def _subunit(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if np.linalg.norm(c) > 1 + TOL_PSD:
        raise ValueError("approximator Bloch vector must have norm <= 1")
    return c


def delta_sq_closed(a, c) -> float:
    """Squared distance ``2 |a - c|`` between sharp ``a.sigma`` and an unbiased qubit approximator."""
    return float(2 * np.linalg.norm(_unit(a) - _subunit(c)))


def epsilon_sq_closed(a, c) -> float:
    """rms error squared, ``1 - |c|^2 + Delta^4 / 4``; equal to ``2 (1 - a.c)``."""
    a, c = _unit(a), _subunit(c)
    delta_sq = delta_sq_closed(a, c)
    return float(1 - c @ c + 0.25 * delta_sq**2)


def branciard_disc(e: ErrorPair) -> tuple[float, bool]:
    lhs = (e.d_z - 1) ** 2 + (e.d_x - 1) ** 2
    return float(lhs), bool(lhs <= 1 + SLACK)


def additive_bound(e: ErrorPair) -> tuple[float, bool]:
    total = e.d_z + e.d_x
    return float(total), bool(total >= ADDITIVE_BOUND - SLACK)


def unbiased_bloch(obs: DiscreteObservable) -> np.ndarray:
    """Bloch vector ``c`` of a qubit observable whose first moment is ``c.sigma``."""
    c0, c = bloch_coefficients(obs.operator())
    if abs(c0) > TOL_PSD:
        raise ValueError("observable is biased (first moment has an identity component)")
    return c


def scan_joint_schemes(schemes: Iterable[Instrument | tuple[str, Instrument]]) -> list[ErrorPair]:
    """Error pairs for "instrument, then sharp X" joint measurements of Z and X.

    The instrument's own outcomes approximate Z; the final X reading
    approximates X through the distorted observable.
    """
    sharp_x = sharp_observable(X)
    pairs = []
    for item in schemes:
        label, inst = item if isinstance(item, tuple) else ("", item)
        c_obs = inst.observable()
        d_obs = distorted_observable(inst, sharp_x)
        if not (is_povm(c_obs.effects) and is_povm(d_obs.effects)):
            raise ValueError(f"scheme {label!r} yields an invalid POVM")
        d_z = float(np.linalg.norm(Z_AXIS - unbiased_bloch(c_obs)))
        d_x = float(np.linalg.norm(X_AXIS - unbiased_bloch(d_obs)))
        pairs.append(ErrorPair(d_z, d_x, label))
    return pairs


def circuit_pair(theta: float) -> ErrorPair:
    """Analytic pair ``(1 - cos 2theta, 1 - sin 2theta)`` of the apparatus family."""
    return ErrorPair(float(1 - np.cos(2 * theta)), float(1 - np.sin(2 * theta)), f"theta={theta:.12g}")

