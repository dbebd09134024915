import numpy as np
import pytest

from qdarwin.errors import ValidationError
from qdarwin.states import (DensityMatrix, LabeledEnsemble, Povm, SeededRng, haar_isometry, haar_unitary,
                            maximally_entangled, measure, measure_local, random_density, random_povm)


def test_density_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4) / 4, (2, 3))


def test_povm_validation():
    with pytest.raises(ValidationError):
        Povm([np.diag([1, 0]), np.diag([0, 0.5])])
    assert len(Povm.computational(3)) == 3


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        LabeledEnsemble([0.5, 0.4], [DensityMatrix.basis(2, 0), DensityMatrix.basis(2, 1)])


def test_rng_child_streams_reproducible():
    a = SeededRng(42).child(3).normal(5)
    b = SeededRng(42).child(3).normal(5)
    c = SeededRng(42).child(4).normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    parent = SeededRng(42)
    parent.normal(100)
    assert np.array_equal(parent.child(3).normal(5), a)


def test_haar_unitary_first_moment():
    # E|U_00|^2 = 1/d for Haar measure
    vals = [abs(haar_unitary(3, SeededRng(1).child(i))[0, 0]) ** 2 for i in range(3000)]
    assert np.mean(vals) == pytest.approx(1 / 3, abs=0.02)


def test_haar_isometry_is_isometry():
    v = haar_isometry(2, 8, SeededRng(2))
    assert np.allclose(v.conj().T @ v, np.eye(2), atol=1e-12)


def test_random_objects_valid():
    rho = random_density((2, 3), rng=SeededRng(3))
    assert rho.dims == (2, 3)
    povm = random_povm(3, 4, SeededRng(4))
    assert np.allclose(sum(povm), np.eye(3), atol=1e-10)


def test_maximally_entangled():
    phi = maximally_entangled(3)
    assert phi.purity() == pytest.approx(1.0)
    assert np.allclose(phi.ptrace([0]).mat, np.eye(3) / 3)


def test_measure_luders():
    plus = DensityMatrix.pure(np.array([1, 1]) / np.sqrt(2))
    probs, posts = measure(plus, Povm.computational(2))
    assert np.allclose(probs, [0.5, 0.5])
    assert np.allclose(posts[1].mat, np.diag([0, 1]))


def test_measure_local_conditional_states():
    bell = DensityMatrix.pure(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    ens = measure_local(bell, 1, Povm.computational(2))
    assert np.allclose(ens.probs, [0.5, 0.5])
    assert np.allclose(ens.states[0].mat, np.diag([1, 0]))
