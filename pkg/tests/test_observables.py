import numpy as np
import pytest

from murlab.lund_wiseman import z_instrument
from murlab.observables import (
    DiscreteObservable,
    Instrument,
    commute_check,
    distorted_observable,
    identity_instrument,
    is_povm,
    lueders_instrument,
    qubit_observable,
    sharp_observable,
    smear,
    trivial_observable,
)
from murlab.qcore import I2, PreconditionError, QuantumState, X, Z, bloch_operator, random_density

from conftest import random_benign_instrument, random_sharp, random_stochastic

PLUS = QuantumState.from_ket(np.array([1, 1]) / np.sqrt(2))
ZERO = QuantumState.from_ket([1, 0])


def test_sharp_z():
    z = sharp_observable(Z)
    assert z.values == (-1.0, 1.0)
    assert np.allclose(z.effects[1], np.diag([1, 0]))
    assert np.allclose(z.effects[0], np.diag([0, 1]))
    assert z.is_sharp()


def test_identity_merges_to_single_outcome():
    obs = sharp_observable(np.eye(2))
    assert obs.values == (1.0,)
    assert np.allclose(obs.effects[0], I2)


def test_degenerate_spectrum_merged():
    obs = sharp_observable(np.diag([2.0, 2.0 + 1e-11, -1.0, 3.0]))
    assert len(obs) == 3
    assert np.allclose(obs.effects[1], np.diag([1, 1, 0, 0]))


def test_sharp_diagonal_axis():
    a = np.ones(3) / np.sqrt(3)
    obs = sharp_observable(bloch_operator(a))
    assert obs.values == pytest.approx((-1.0, 1.0))
    assert np.allclose(obs.effects[1], 0.5 * (I2 + bloch_operator(a)), atol=1e-14)
    assert np.allclose(obs.effects[0], 0.5 * (I2 - bloch_operator(a)), atol=1e-14)


def test_sharp_rejects_non_hermitian():
    with pytest.raises(PreconditionError):
        sharp_observable(np.array([[0, 1], [0, 0]]))


def test_observable_validation():
    with pytest.raises(ValueError):
        DiscreteObservable((1.0, -1.0), (np.diag([1, 0]), np.diag([0, 0.5])))
    with pytest.raises(ValueError):
        DiscreteObservable((1.0, -1.0), (np.diag([1.5, 0]), np.diag([-0.5, 1])))
    with pytest.raises(ValueError):
        DiscreteObservable((1.0,), ())


def test_duplicate_values_merge():
    obs = DiscreteObservable((1.0, 1.0, 0.0), (np.diag([0.5, 0]), np.diag([0.5, 0]), np.diag([0, 1])))
    assert obs.values == (0.0, 1.0)
    assert obs.is_sharp()


def test_smear_identity_is_noop(rng):
    b = random_sharp(rng, 4)
    out = smear(b, np.eye(4))
    assert out.values == b.values
    assert all(np.allclose(e, f) for e, f in zip(out.effects, b.effects))


@pytest.mark.parametrize("s", [0.0, 0.25, 0.6, 1.0])
def test_smear_sharp_x(s):
    x = sharp_observable(X)  # values (-1, +1)
    lam = np.array([[(1 + s) / 2, (1 - s) / 2], [(1 - s) / 2, (1 + s) / 2]])
    out = smear(x, lam)
    assert np.allclose(out.effects[1], 0.5 * (I2 + s * X))
    assert np.allclose(out.effects[0], 0.5 * (I2 - s * X))


def test_total_smearing_is_trivial(rng):
    b = random_sharp(rng, 4)
    col = rng.dirichlet(np.ones(3))
    out = smear(b, np.tile(col[:, None], (1, 4)), values=(0.0, 1.0, 2.0))
    for w, e in zip(col, out.effects):
        assert np.allclose(e, w * np.eye(4))


def test_smear_commutes_with_sharp(rng):
    for _ in range(100):
        dim = int(rng.choice([2, 4]))
        b = random_sharp(rng, dim)
        out = smear(b, random_stochastic(rng, dim, dim))
        assert commute_check(b, out)
        assert is_povm(out.effects)


def test_smear_rejects_bad_matrix(rng):
    b = random_sharp(rng)
    with pytest.raises(ValueError):
        smear(b, np.array([[0.5, 0.5], [0.6, 0.5]]))
    with pytest.raises(ValueError):
        smear(b, np.ones((3, 2)) / 3)


def test_lueders_examples():
    inst = lueders_instrument(sharp_observable(Z))
    assert np.allclose(inst.channel(PLUS.matrix), I2 / 2)
    # outcome +1 (index 1) certain in |0>, state unchanged
    assert np.trace(inst.apply(1, ZERO.matrix)).real == pytest.approx(1)
    assert np.allclose(inst.apply(1, ZERO.matrix), ZERO.matrix)
    assert np.trace(inst.apply(0, ZERO.matrix)).real == pytest.approx(0)


def test_lueders_needs_sharp():
    with pytest.raises(PreconditionError):
        lueders_instrument(qubit_observable([0, 0, 0.5]))


def test_lueders_reproduces_observable(rng):
    a = random_sharp(rng, 4)
    obs = lueders_instrument(a).observable()
    assert all(np.allclose(e, f) for e, f in zip(obs.effects, a.effects))


def test_identity_instrument_leaves_observable(rng):
    for dim in (2, 4, 8):
        b = random_sharp(rng, dim)
        d = distorted_observable(identity_instrument(dim), b)
        assert d.values == b.values
        assert all(np.allclose(e, f) for e, f in zip(d.effects, b.effects))


def test_lueders_z_distorts_x_to_trivial():
    d = distorted_observable(lueders_instrument(sharp_observable(Z)), sharp_observable(X))
    for e in d.effects:
        assert np.allclose(e, I2 / 2)


@pytest.mark.parametrize("theta", np.linspace(0, np.pi / 2, 7))
def test_circuit_instrument_distortion(theta):
    d = distorted_observable(z_instrument(theta), sharp_observable(X))
    s = np.sin(2 * theta)
    assert np.allclose(d.effects[1], 0.5 * (I2 + s * X), atol=1e-14)
    assert np.allclose(d.effects[0], 0.5 * (I2 - s * X), atol=1e-14)


def test_commute_check_examples(rng):
    z = sharp_observable(Z)
    assert commute_check(z, smear(z, random_stochastic(rng, 2, 2)))
    assert not commute_check(z, sharp_observable(X))
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    assert commute_check(sharp_observable(bloch_operator(a)), qubit_observable(0.4 * a))


def test_instrument_validation():
    with pytest.raises(ValueError):
        Instrument((0.0,), ((0.5 * I2,),))
    with pytest.raises(ValueError):
        Instrument((0.0, 1.0), ((I2,),))


def test_instrument_observable_and_channel(rng):
    b = random_sharp(rng, 4)
    inst = random_benign_instrument(rng, b)
    rho = random_density(rng, 4).matrix
    assert np.trace(inst.channel(rho)).real == pytest.approx(1)
    obs = inst.observable()
    assert is_povm(obs.effects)
    probs = obs.probabilities(rho)
    direct = [np.trace(inst.apply(n, rho)).real for n in range(len(inst.values))]
    assert np.allclose(probs, direct)


def test_random_distortions_are_povms(rng):
    for _ in range(200):
        dim = int(rng.choice([2, 4, 8]))
        b = random_sharp(rng, dim)
        inst = random_benign_instrument(rng, b)
        d = distorted_observable(inst, b)
        assert is_povm(d.effects)
        assert commute_check(b, d)


def test_trivial_observable():
    t = trivial_observable(4, 2.0)
    assert t.values == (2.0,)
    assert trivial_observable(2).is_sharp()  # the identity is a projector


def test_effects_frozen():
    z = sharp_observable(Z)
    with pytest.raises(ValueError):
        z.effects[0][0, 0] = 2
