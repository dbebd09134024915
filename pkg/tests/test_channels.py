import numpy as np
import pytest

from qdarwin import channels as chm
from qdarwin import linalg as la
from qdarwin.errors import ValidationError
from qdarwin.states import DensityMatrix, Povm, SeededRng, random_density

from oracles import apply_kraus, choi_unnormalized, rand_kraus
from oracles import random_density as oracle_density


def test_choi_convention_matches_oracle(gen):
    ks = rand_kraus(2, 3, 2, gen)
    ch = chm.QuantumChannel.from_kraus(ks)
    assert np.allclose(ch.choi * 2, choi_unnormalized(ks, 2), atol=1e-12)


def test_action_from_choi_and_kraus(gen):
    ks = rand_kraus(3, 2, 3, gen)
    ch = chm.QuantumChannel.from_kraus(ks)
    rho = oracle_density(3, gen)
    want = apply_kraus(ks, rho)
    assert np.allclose(chm.apply(ch, rho, via="choi").mat, want, atol=1e-12)
    assert np.allclose(chm.apply(ch, rho, via="kraus").mat, want, atol=1e-12)


def test_kraus_recovered_from_choi(gen):
    ks = rand_kraus(2, 2, 2, gen)
    ch = chm.QuantumChannel.from_choi(chm.QuantumChannel.from_kraus(ks).choi, 2, (2,))
    rho = oracle_density(2, gen)
    assert np.allclose(apply_kraus(ch.kraus, rho), apply_kraus(ks, rho), atol=1e-10)
    v = ch.isometry
    assert np.allclose(v.conj().T @ v, np.eye(2), atol=1e-10)


def test_not_trace_preserving_rejected():
    with pytest.raises(ValidationError):
        chm.QuantumChannel.from_kraus([np.diag([1.0, 0.5])])
    with pytest.raises(ValidationError):
        chm.QuantumChannel.from_choi(np.eye(4) / 2, 2, (2,))


def test_replacer_and_identity(gen):
    rho = oracle_density(2, gen)
    assert np.allclose(chm.QuantumChannel.identity(2)(rho).mat, rho)
    sig = np.diag([0.3, 0.7])
    assert np.allclose(chm.QuantumChannel.replacer(sig, 2)(rho).mat, sig)


def test_broadcast_model_action():
    ch = chm.model_broadcast_classical(2, 3)
    rho = np.array([[0.6, 0.2], [0.2, 0.4]])
    out = ch(rho).mat
    want = np.zeros((8, 8))
    want[0, 0], want[7, 7] = 0.6, 0.4
    assert np.allclose(out, want)


def test_cnot_cascade_fragments_dephase():
    ch = chm.model_cnot_cascade(3)
    frag = chm.effective_fragment_channel(ch, [1])
    rho = np.array([[0.6, 0.2j], [-0.2j, 0.4]])
    assert np.allclose(frag(rho).mat, np.diag([0.6, 0.4]))


def test_partial_swap_limits(gen):
    rho = oracle_density(2, gen)
    full = chm.model_partial_swap(3, np.pi / 2)
    assert np.allclose(chm.effective_fragment_channel(full, [0])(rho).mat, rho, atol=1e-12)
    assert np.allclose(chm.effective_fragment_channel(full, [2])(rho).mat, np.diag([1, 0]), atol=1e-12)
    none = chm.model_partial_swap(2, 0.0)
    assert np.allclose(none(rho).mat, np.diag([1, 0, 0, 0]), atol=1e-12)


def test_apply_local(gen):
    rho = DensityMatrix(oracle_density(4, gen), (2, 2))
    ch = chm.model_cnot_cascade(2)
    out = chm.apply_local(ch, rho, 1)
    assert out.dims == (2, 2, 2)
    assert np.allclose(out.ptrace([0]).mat, rho.ptrace([0]).mat, atol=1e-12)


def test_measure_prepare_cptp():
    povm = Povm.from_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    mp = chm.MeasurePrepareChannel(povm, (DensityMatrix.basis(3, 0), DensityMatrix.maximally_mixed(3)))
    ch = mp.to_channel()
    assert np.allclose(la.partial_trace(ch.choi, ch.choi_dims, [0]), np.eye(2) / 2)
    plus = np.full((2, 2), 0.5)
    assert np.allclose(ch(plus).mat, np.diag([1, 0, 0]), atol=1e-12)


def test_serialization_roundtrip():
    ch = chm.model_haar_env(2, (2, 2), SeededRng(9))
    back = chm.loads_channel(chm.dumps_channel(ch))
    assert np.array_equal(back.choi, ch.choi)
    with pytest.raises(ValidationError):
        chm.channel_from_dict({"in_dim": 2})


def test_haar_model_reproducible():
    a = chm.model_haar_env(2, (2, 2, 2), SeededRng(5))
    b = chm.model_haar_env(2, (2, 2, 2), SeededRng(5))
    assert np.array_equal(a.choi, b.choi)
    assert a.representation == "isometry"
    assert random_density(2, rng=SeededRng(1)).dim == 2
