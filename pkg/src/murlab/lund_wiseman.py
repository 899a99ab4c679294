"""Three-qubit weak/strong disturbance measurement circuit.

Wires are ordered (probe, object, apparatus).  The probe starts in
``gamma|0> + gamma'|1>``, the object in ``alpha|0> + beta|1>`` and the
apparatus in ``cos(theta)|0> + sin(theta)|1>``.  The circuit applies
H(object), CNOT(object -> probe), H(object), CNOT(object -> apparatus)
and then reads Z on the probe, X on the object and Z on the apparatus.

Outcome signs are indexed ``(k, l, n)`` = (Z_p, X_f, Z_m) with ``+1``
meaning the ``|0>`` (resp. ``|+>``) result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .error_measures import QuasiDistribution
from .observables import DiscreteObservable, Instrument, is_povm
from .qcore import (
    I2,
    TOL_HERM,
    PreconditionError,
    QuantumState,
    X,
    Z,
    tensor,
)

SIGNS = (1, -1)
OUTCOMES = tuple(itertools.product(SIGNS, SIGNS, SIGNS))
WEAK_MARGIN = 1e-9

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def _z_ket(sign: int) -> np.ndarray:
    return KET0 if sign == 1 else KET1


def _x_ket(sign: int) -> np.ndarray:
    return KET_PLUS if sign == 1 else KET_MINUS


def _idx(sign: int) -> int:
    return 0 if sign == 1 else 1


@dataclass(frozen=True)
class CircuitConfig:
    alpha: complex
    beta: complex
    gamma: float
    theta: float

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > TOL_HERM:
            raise ValueError(f"object amplitudes not normalized (|alpha|^2+|beta|^2 = {norm:.15g})")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def gamma_prime(self) -> float:
        return float(np.sqrt(max(1.0 - self.gamma**2, 0.0)))

    @property
    def strength(self) -> float:
        """Strength ``2 gamma^2 - 1`` of the initial X measurement."""
        return 2 * self.gamma**2 - 1

    def object_state(self) -> QuantumState:
        return QuantumState.from_ket([self.alpha, self.beta])

    def mean_x(self) -> float:
        return float(2 * (self.alpha * np.conj(self.beta)).real)


@dataclass(frozen=True)
class OutcomeDistribution8:
    """``probs[i, j, m]`` with index 0 for outcome +1 and 1 for -1, in (Z_p, X_f, Z_m) order."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(2, 2, 2)
        if np.any(p < -TOL_HERM):
            raise ValueError("negative outcome probability")
        if abs(p.sum() - 1) > TOL_HERM:
            raise ValueError(f"outcome probabilities sum to {p.sum():.15g}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, signs: tuple[int, int, int]) -> float:
        k, l, n = signs
        return float(self.probs[_idx(k), _idx(l), _idx(n)])

    def items(self):
        return [((k, l, n), self[k, l, n]) for k, l, n in OUTCOMES]

    def zp_xf(self) -> np.ndarray:
        """Marginal over the apparatus readout, indexed like ``probs[:, :]``."""
        return self.probs.sum(axis=2)


def circuit_unitary() -> np.ndarray:
    """The full 8x8 gate sequence on (probe, object, apparatus)."""
    h_obj = tensor(I2, H, I2)
    cnot_probe = tensor(I2, P0, I2) + tensor(X, P1, I2)
    cnot_app = tensor(I2, P0, I2) + tensor(I2, P1, X)
    return cnot_app @ h_obj @ cnot_probe @ h_obj


def final_state(cfg: CircuitConfig) -> np.ndarray:
    probe = np.array([cfg.gamma, cfg.gamma_prime], dtype=complex)
    obj = np.array([cfg.alpha, cfg.beta], dtype=complex)
    app = np.array([np.cos(cfg.theta), np.sin(cfg.theta)], dtype=complex)
    return circuit_unitary() @ np.kron(np.kron(probe, obj), app)


def simulate(cfg: CircuitConfig) -> OutcomeDistribution8:
    """Exact outcome probabilities from the evolved state vector."""
    psi = final_state(cfg)
    p = np.zeros((2, 2, 2))
    for k, l, n in OUTCOMES:
        basis = np.kron(np.kron(_z_ket(k), _x_ket(l)), _z_ket(n))
        p[_idx(k), _idx(l), _idx(n)] = abs(np.vdot(basis, psi)) ** 2
    return OutcomeDistribution8(p)


def povm_8(gamma: float, theta: float) -> dict[tuple[int, int, int], np.ndarray]:
    """Eight-outcome POVM on the object, in closed form.

    ``8 E_{kln} = (1 + l s k g) 1 + (k g + l s) X + n 2 gamma gamma' cos(2 theta) Z``
    with ``g = 2 gamma^2 - 1`` and ``s = sin(2 theta)``.
    """
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    g = 2 * gamma**2 - 1
    s = np.sin(2 * theta)
    zc = 2 * gamma * np.sqrt(max(1 - gamma**2, 0.0)) * np.cos(2 * theta)
    return {
        (k, l, n): ((1 + l * s * k * g) * I2 + (k * g + l * s) * X + n * zc * Z) / 8
        for k, l, n in OUTCOMES
    }


@dataclass(frozen=True)
class Marginals:
    """Two-outcome marginal observables of the circuit plus the (Z_p, X_f) joint POVM."""

    initial: DiscreteObservable
    final: DiscreteObservable
    apparatus: DiscreteObservable
    joint: dict[tuple[int, int], np.ndarray]


def marginals(cfg: CircuitConfig) -> Marginals:
    e = povm_8(cfg.gamma, cfg.theta)

    def obs(pos: int) -> DiscreteObservable:
        eff = {sgn: sum(v for key, v in e.items() if key[pos] == sgn) for sgn in SIGNS}
        return DiscreteObservable((1.0, -1.0), (eff[1], eff[-1]))

    joint = {(k, l): e[k, l, 1] + e[k, l, -1] for k in SIGNS for l in SIGNS}
    return Marginals(initial=obs(0), final=obs(1), apparatus=obs(2), joint=joint)


def operational_probabilities(cfg: CircuitConfig) -> dict[tuple[int, int], float]:
    """``P(Z_p = k, X_f = l)`` from the joint POVM."""
    rho = cfg.object_state().matrix
    return {kl: float(np.einsum("ij,ji->", rho, f).real) for kl, f in marginals(cfg).joint.items()}


@dataclass(frozen=True)
class WeakValueResult:
    eta: float
    deviations: QuasiDistribution
    joint: dict[tuple[int, int], float]


def weak_reconstruction(cfg: CircuitConfig) -> WeakValueResult:
    """Weak-valued joint quasi-probabilities of (X_i, X_f) and the resulting eta(X).

    For each final outcome ``l`` the initial value ``x`` gets weight
    ``(P(X_f=l) + x (P(+,l) - P(-,l)) / (2 gamma^2 - 1)) / 2``.
    """
    g = cfg.strength
    if g <= WEAK_MARGIN:
        raise PreconditionError("weak-value reconstruction needs gamma^2 > 1/2")
    op = operational_probabilities(cfg)
    for l in SIGNS:
        if op[1, l] + op[-1, l] <= TOL_HERM:
            raise PreconditionError(f"P(X_f={l:+d}) vanishes; weak-valued conditional is undefined")
    joint = {}
    for x in SIGNS:
        for l in SIGNS:
            joint[x, l] = 0.5 * (op[1, l] + op[-1, l] + x * (op[1, l] - op[-1, l]) / g)
    dev: dict[float, float] = {-2.0: 0.0, 0.0: 0.0, 2.0: 0.0}
    for (x, l), w in joint.items():
        dev[float(l - x)] += w
    quasi = QuasiDistribution(tuple(dev), tuple(dev.values()))
    eta_sq = quasi.second_moment()
    if eta_sq < -TOL_HERM:
        raise ArithmeticError(f"reconstructed eta^2 = {eta_sq:.3g} is negative")
    return WeakValueResult(float(np.sqrt(max(eta_sq, 0.0))), quasi, joint)


def eta_weak(cfg: CircuitConfig) -> tuple[float, QuasiDistribution]:
    r = weak_reconstruction(cfg)
    return r.eta, r.deviations


def eta_strong(cfg: CircuitConfig) -> float:
    """eta(X) from the anticorrelated (Z_p, X_f) frequencies of the strong circuit."""
    if abs(cfg.gamma - 1.0) > TOL_HERM:
        raise PreconditionError("strong method requires gamma = 1")
    pq = simulate(cfg).zp_xf()
    eta_sq = 4 * pq[_idx(1), _idx(-1)] + 4 * pq[_idx(-1), _idx(1)]
    return float(np.sqrt(eta_sq))


def z_instrument(theta: float) -> Instrument:
    """The apparatus stage alone: CNOT onto ``cos|0> + sin|1>`` then a Z readout.

    Kraus operator for readout ``n`` is ``<n|_m U |m_0>`` on the object.
    """
    u = tensor(P0, I2) + tensor(P1, X)
    m0 = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
    kraus = []
    for n in SIGNS:
        # (1 (x) <n|) U (1 (x) |m0>)
        k = np.kron(I2, _z_ket(n).conj()[None, :]) @ u @ np.kron(I2, m0[:, None])
        kraus.append((k,))
    return Instrument((1.0, -1.0), tuple(kraus))


def weak_x_instrument(gamma: float) -> Instrument:
    """The probe stage alone: H, CNOT onto ``gamma|0> + gamma'|1>``, H, then a Z readout."""
    u = tensor(I2, H) @ (tensor(I2, P0) + tensor(X, P1)) @ tensor(I2, H)
    probe = np.array([gamma, np.sqrt(max(1 - gamma**2, 0.0))], dtype=complex)
    kraus = []
    for k in SIGNS:
        op = np.kron(_z_ket(k).conj()[None, :], I2) @ u @ np.kron(probe[:, None], I2)
        kraus.append((op,))
    return Instrument((1.0, -1.0), tuple(kraus))


def povm_from_stages(gamma: float, theta: float) -> dict[tuple[int, int, int], np.ndarray]:
    """Eight-outcome POVM composed from the two stage instruments and the final X reading."""
    probe, app = weak_x_instrument(gamma), z_instrument(theta)
    x_proj = {l: np.outer(_x_ket(l), _x_ket(l).conj()) for l in SIGNS}
    out = {}
    for k, l, n in OUTCOMES:
        inner = app.dual(_idx(n), x_proj[l])
        out[k, l, n] = probe.dual(_idx(k), inner)
    return out


def check_povms(cfg: CircuitConfig) -> bool:
    m = marginals(cfg)
    return (
        is_povm(list(povm_8(cfg.gamma, cfg.theta).values()))
        and is_povm(list(m.joint.values()))
        and all(is_povm(o.effects) for o in (m.initial, m.final, m.apparatus))
    )
