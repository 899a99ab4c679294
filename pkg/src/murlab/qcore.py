"""Dense complex linear algebra for one to three qubits.

Operators are plain ``numpy`` arrays of shape ``(d, d)`` with ``d`` in
``{2, 4, 8}``.  Multi-qubit operators use the wire order
``(probe, object, apparatus)``; qubit 0 is the leftmost Kronecker factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

TOL_HERM = 1e-12
TOL_PSD = 1e-10
MAX_DIM = 8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = np.stack([X, Y, Z])

for _m in (I2, X, Y, Z, SIGMA):
    _m.setflags(write=False)


ROUNDOFF_FACTOR = 1e3


def sqrt_above_roundoff(sq: float, scale: float) -> float:
    """Square root of a computed nonnegative quantity of magnitude up to ``scale``.

    Values at the level of accumulated round-off (relative to ``scale``)
    are returned as exactly zero, so an analytically vanishing distance does
    not come out as ``sqrt(1e-16) = 1e-8``.
    """
    if sq <= ROUNDOFF_FACTOR * np.finfo(float).eps * scale:
        return 0.0
    return float(np.sqrt(sq))


class PreconditionError(ValueError):
    """An input violates a documented precondition of an operation."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def as_operator(x) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
    if m.shape[0] not in (1, 2, 4, 8):
        raise ValueError(f"operator dimension {m.shape[0]} not supported (max {MAX_DIM})")
    return m


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_positive(m: np.ndarray, tol: float = TOL_PSD) -> bool:
    """Hermitian with smallest eigenvalue at least ``-tol``."""
    m = np.asarray(m)
    if not is_hermitian(m, tol=max(tol, TOL_HERM)):
        return False
    return bool(min_eigenvalue(m) >= -tol)


def is_unitary(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def is_projector(m: np.ndarray, tol: float = TOL_PSD) -> bool:
    m = np.asarray(m)
    return is_hermitian(m, tol) and bool(np.max(np.abs(m @ m - m)) <= tol)


def min_eigenvalue(m: np.ndarray) -> float:
    m = np.asarray(m)
    h = 0.5 * (m + m.conj().T)
    if h.shape == (2, 2):
        # closed form for 2x2: mean minus half the eigenvalue gap
        mean = 0.5 * (h[0, 0].real + h[1, 1].real)
        half_gap = np.hypot(0.5 * (h[0, 0].real - h[1, 1].real), abs(h[0, 1]))
        return float(mean - half_gap)
    return float(np.linalg.eigvalsh(h)[0])


def commutator_norm(x: np.ndarray, y: np.ndarray) -> float:
    """Largest entry of ``|xy - yx|``."""
    return float(np.max(np.abs(x @ y - y @ x)))


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of the given operators, left to right."""
    if not ops:
        raise ValueError("tensor needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    if out.shape[0] > MAX_DIM:
        raise ValueError(f"tensor product dimension {out.shape[0]} exceeds {MAX_DIM}")
    return out


def _n_qubits(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} does not factor into qubits")
    return n


def partial_trace(x: np.ndarray, keep: int | Iterable[int]) -> np.ndarray:
    """Trace out every qubit not listed in ``keep``.

    Qubit indices refer to Kronecker factors, 0 being leftmost.  Kept
    qubits retain their relative order.  ``keep=()`` gives the full trace
    as a 1x1 matrix.
    """
    x = np.asarray(x, dtype=complex)
    n = _n_qubits(x.shape[0])
    keep = (keep,) if isinstance(keep, (int, np.integer)) else tuple(keep)
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid subsystem indices {keep} for {n} qubits")
    keep = tuple(sorted(keep))
    drop = [q for q in range(n) if q not in keep]

    t = x.reshape((2,) * (2 * n))
    # trace pairs from the highest index down so remaining axis numbers stay valid
    remaining = n
    for q in sorted(drop, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + remaining)
        remaining -= 1
    d = 2 ** len(keep)
    return t.reshape(d, d)


def bloch_operator(r) -> np.ndarray:
    """``r . sigma`` for a real 3-vector ``r``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have three components")
    return np.tensordot(r, SIGMA, axes=1)


def bloch_to_effect(c, sign: int = 1) -> np.ndarray:
    """Return ``(1 + sign * c.sigma) / 2``; ``sign`` is +1 or -1."""
    c = np.asarray(c, dtype=float)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if np.linalg.norm(c) > 1 + TOL_PSD:
        raise ValueError(f"Bloch vector norm {np.linalg.norm(c):.6g} exceeds 1")
    return 0.5 * (I2 + sign * bloch_operator(c))


def bloch_coefficients(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Decompose a Hermitian 2x2 ``m`` as ``c0 * 1 + c . sigma``."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("Bloch decomposition needs a 2x2 operator")
    c0 = 0.5 * np.trace(m).real
    c = 0.5 * np.real(np.einsum("kij,ji->k", SIGMA, m))
    return float(c0), c


@dataclass(frozen=True)
class QuantumState:
    """Density operator with unit trace and no negative eigenvalues."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_operator(self.matrix)
        if not is_hermitian(m, TOL_HERM):
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1) > TOL_HERM * max(1, m.shape[0]):
            raise ValueError(f"density operator trace {np.trace(m).real:.15g} != 1")
        if min_eigenvalue(m) < -TOL_PSD:
            raise ValueError("density operator is not positive semidefinite")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, psi) -> "QuantumState":
        psi = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if abs(norm - 1) > TOL_HERM:
            raise ValueError(f"ket is not normalized (norm {norm:.15g})")
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_bloch(cls, r) -> "QuantumState":
        r = np.asarray(r, dtype=float)
        if np.linalg.norm(r) > 1 + TOL_PSD:
            raise ValueError("Bloch vector of a state must have norm <= 1")
        return cls(0.5 * (I2 + bloch_operator(r)))

    @classmethod
    def maximally_mixed(cls, dim: int = 2) -> "QuantumState":
        return cls(np.eye(dim, dtype=complex) / dim)

    def bloch(self) -> np.ndarray:
        """Bloch vector ``r`` with ``rho = (1 + r.sigma) / 2`` (qubits only)."""
        return 2 * bloch_coefficients(self.matrix)[1]

    def is_pure(self, tol: float = TOL_PSD) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1) <= tol


def expectation(rho: QuantumState, x: np.ndarray) -> complex:
    """``tr(rho x)``.  For Hermitian ``x`` the imaginary part is asserted small."""
    m = rho.matrix if isinstance(rho, QuantumState) else np.asarray(rho)
    x = np.asarray(x, dtype=complex)
    if m.shape != x.shape:
        raise ValueError(f"dimension mismatch: state {m.shape} vs operator {x.shape}")
    val = complex(np.einsum("ij,ji->", m, x))
    if is_hermitian(x) and abs(val.imag) > TOL_HERM * max(1.0, np.abs(x).max()):
        raise ArithmeticError(f"expectation of Hermitian operator has imaginary part {val.imag:g}")
    return val


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> QuantumState:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState.from_ket(v / np.linalg.norm(v))


def random_density(rng: np.random.Generator, dim: int = 2) -> QuantumState:
    """Hilbert-Schmidt random mixed state."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return QuantumState(m / np.trace(m).real)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
