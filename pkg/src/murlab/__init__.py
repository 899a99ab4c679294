"""Error and disturbance measures for quantum measurements, with direct-test simulations."""

__version__ = "0.1.0"

from .qcore import PreconditionError, QuantumState  # noqa: E402
from .observables import (  # noqa: E402
    DiscreteObservable,
    Instrument,
    distorted_observable,
    lueders_instrument,
    qubit_observable,
    sharp_observable,
    smear,
)
from .error_measures import epsilon_direct, epsilon_general, eta_direct, eta_general  # noqa: E402
from .transport import delta2_observables, wasserstein2  # noqa: E402
from .lund_wiseman import CircuitConfig, eta_strong, eta_weak, simulate  # noqa: E402

__all__ = [
    "CircuitConfig",
    "DiscreteObservable",
    "Instrument",
    "PreconditionError",
    "QuantumState",
    "delta2_observables",
    "distorted_observable",
    "epsilon_direct",
    "epsilon_general",
    "eta_direct",
    "eta_general",
    "eta_strong",
    "eta_weak",
    "lueders_instrument",
    "qubit_observable",
    "sharp_observable",
    "simulate",
    "smear",
    "wasserstein2",
]
