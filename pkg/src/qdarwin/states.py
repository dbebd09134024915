"""States, POVMs, ensembles, measurement and seeded random generators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import ValidationError

POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-10
POVM_SUM_TOL = 1e-9
#: Outcomes at or below this probability have no defined post-measurement state.
NEGLIGIBLE_PROB = 1e-12


class SeededRng:
    """Reproducible random stream with explicit splitting.

    Wraps a PCG64 :class:`numpy.random.Generator`. ``split`` derives
    independent child streams from the seed alone, so child ``i`` is the
    same regardless of how many siblings are requested or how much the
    parent has been consumed.
    """

    def __init__(self, seed: int = 0, *, _seq: np.random.SeedSequence | None = None):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._seq = _seq if _seq is not None else np.random.SeedSequence(self.seed)
        self.gen = np.random.Generator(np.random.PCG64(self._seq))
        self.draws = 0

    def split(self, n: int) -> list["SeededRng"]:
        children = []
        for i in range(n):
            seq = np.random.SeedSequence(self._seq.entropy, spawn_key=self._seq.spawn_key + (i,))
            children.append(SeededRng(self.seed, _seq=seq))
        return children

    def child(self, i: int) -> "SeededRng":
        seq = np.random.SeedSequence(self._seq.entropy, spawn_key=self._seq.spawn_key + (int(i),))
        return SeededRng(self.seed, _seq=seq)

    def normal(self, size) -> np.ndarray:
        self.draws += 1
        return self.gen.standard_normal(size)

    def complex_normal(self, size) -> np.ndarray:
        self.draws += 1
        return (self.gen.standard_normal(size) + 1j * self.gen.standard_normal(size)) / np.sqrt(2.0)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, spawn_key={self._seq.spawn_key})"


def as_rng(rng) -> SeededRng:
    """Accept a :class:`SeededRng`, an integer seed, or ``None`` (seed 0)."""
    if isinstance(rng, SeededRng):
        return rng
    if rng is None:
        return SeededRng(0)
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng))
    if isinstance(rng, np.random.Generator):
        return SeededRng(int(rng.integers(0, 2**63)))
    raise TypeError(f"cannot make a SeededRng from {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive unit-trace operator with a tensor factorization ``dims``."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, mat, dims: Sequence[int] | None = None, *, validate: bool = True):
        m = la.as_matrix(mat)
        if dims is None:
            dims = (m.shape[0],)
        dims = la.check_dims(dims, m.shape[0])
        if validate:
            check_state(m)
        m = la.hermitian_part(m)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def ptrace(self, keep) -> "DensityMatrix":
        kept = la._normalize_indices(keep, len(self.dims))
        return DensityMatrix(la.partial_trace(self.mat, self.dims, kept), [self.dims[i] for i in kept], validate=False)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.mat, other.mat), self.dims + other.dims, validate=False)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    @classmethod
    def pure(cls, vec, dims: Sequence[int] | None = None) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), dims, validate=False)

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int] | int) -> "DensityMatrix":
        dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        d = int(np.prod(dims))
        return cls(np.eye(d) / d, dims, validate=False)

    @classmethod
    def basis(cls, d: int, k: int) -> "DensityMatrix":
        m = np.zeros((d, d), dtype=complex)
        m[k, k] = 1.0
        return cls(m, (d,), validate=False)


def check_state(m, tol: float = POSITIVITY_TOL) -> None:
    m = la.check_hermitian(m, tol)
    tr = np.trace(m)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"density matrix trace is {tr.real:.12g}, expected 1 within {TRACE_TOL:g}")
    wmin = float(np.min(la.eigvalsh(m)))
    if wmin < -tol:
        raise ValidationError(f"density matrix has eigenvalue {wmin:.3e} below -{tol:g}")


def as_density(rho, dims=None) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(rho, dims)


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite list of positive operators summing to the identity."""

    elements: tuple[np.ndarray, ...]
    dim: int

    def __init__(self, elements, *, validate: bool = True):
        els = tuple(la.hermitian_part(la.as_matrix(e)) for e in elements)
        if not els:
            raise ValidationError("a POVM needs at least one element")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d):
                raise ValidationError(f"POVM elements must all be {d}x{d}, got {e.shape}")
            e.setflags(write=False)
        if validate:
            check_povm(els)
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "dim", d)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, k) -> np.ndarray:
        return self.elements[k]

    def as_array(self) -> np.ndarray:
        return np.stack(self.elements)

    @classmethod
    def computational(cls, d: int) -> "Povm":
        els = []
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, k] = 1.0
            els.append(e)
        return cls(els, validate=False)

    @classmethod
    def from_basis(cls, u) -> "Povm":
        """Projective measurement onto the columns of unitary ``u``."""
        u = la.as_matrix(u)
        return cls([np.outer(u[:, k], u[:, k].conj()) for k in range(u.shape[1])], validate=False)

    @classmethod
    def trivial(cls, d: int) -> "Povm":
        return cls([np.eye(d, dtype=complex)], validate=False)


def check_povm(elements, pos_tol: float = POSITIVITY_TOL, sum_tol: float = POVM_SUM_TOL) -> None:
    d = elements[0].shape[0]
    for k, e in enumerate(elements):
        wmin = float(np.min(la.eigvalsh(e)))
        if wmin < -pos_tol:
            raise ValidationError(f"POVM element {k} has eigenvalue {wmin:.3e} below -{pos_tol:g}")
    dev = float(np.max(np.abs(sum(elements) - np.eye(d))))
    if dev > sum_tol:
        raise ValidationError(f"POVM elements sum to identity only within {dev:.3e} (tolerance {sum_tol:g})")


@dataclass(frozen=True, eq=False)
class LabeledEnsemble:
    """Probability vector paired with equal-dimension states.

    ``labels`` records which measurement outcome each member came from when
    outcomes of negligible probability were dropped.
    """

    probs: np.ndarray
    states: tuple[DensityMatrix, ...]
    labels: tuple = field(default=())

    def __init__(self, probs, states, labels=None):
        p = np.asarray(probs, dtype=float).ravel()
        states = tuple(as_density(s) for s in states)
        if len(states) == 0:
            raise ValidationError("ensemble is empty")
        if len(p) != len(states):
            raise ValidationError(f"{len(p)} probabilities for {len(states)} states")
        if np.any(p < -1e-12):
            raise ValidationError(f"negative probability {p.min():.3e} in ensemble")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValidationError(f"ensemble probabilities sum to {p.sum():.12g}")
        d = states[0].dim
        if any(s.dim != d for s in states):
            raise ValidationError("ensemble states have unequal dimensions")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", tuple(labels) if labels is not None else tuple(range(len(states))))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def average(self) -> DensityMatrix:
        m = sum(p * s.mat for p, s in zip(self.probs, self.states))
        return DensityMatrix(m, self.states[0].dims, validate=False)


def maximally_entangled(d: int) -> DensityMatrix:
    """``Φ = d^{-1} Σ_{k,k'} |kk><k'k'|`` on two copies of ``C^d``."""
    if d < 1:
        raise ValidationError("dimension must be positive")
    v = np.zeros(d * d, dtype=complex)
    v[[k * d + k for k in range(d)]] = 1.0 / np.sqrt(d)
    return DensityMatrix(np.outer(v, v.conj()), (d, d), validate=False)


def measure(rho, povm: Povm) -> tuple[np.ndarray, list[DensityMatrix | None]]:
    """Outcome probabilities and Lüders post-measurement states.

    The post state for outcome ``k`` is ``sqrt(M_k) ρ sqrt(M_k) / p_k``; it is
    ``None`` when ``p_k`` is at most :data:`NEGLIGIBLE_PROB`.
    """
    rho = as_density(rho)
    if povm.dim != rho.dim:
        raise ValidationError(f"POVM acts on dimension {povm.dim}, state has dimension {rho.dim}")
    probs = np.array([np.real(np.trace(e @ rho.mat)) for e in povm])
    posts: list[DensityMatrix | None] = []
    for e, p in zip(povm, probs):
        if p <= NEGLIGIBLE_PROB:
            posts.append(None)
            continue
        s = la.sqrtm_psd(e)
        posts.append(DensityMatrix(s @ rho.mat @ s / p, rho.dims, validate=False))
    return probs, posts


def measure_local(rho, factor: int, povm: Povm) -> LabeledEnsemble:
    """Measure one tensor factor; return the conditional states of the rest.

    Outcomes with negligible probability are dropped (their labels are
    omitted from ``labels``) and the remaining probabilities renormalized.
    """
    rho = as_density(rho)
    n = len(rho.dims)
    if not 0 <= factor < n:
        raise ValidationError(f"factor {factor} out of range for {n} factors")
    if povm.dim != rho.dims[factor]:
        raise ValidationError(f"POVM acts on dimension {povm.dim}, factor {factor} has dimension {rho.dims[factor]}")
    if n == 1:
        raise ValidationError("measure_local needs at least two factors")
    rest = [i for i in range(n) if i != factor]
    probs, states, labels = [], [], []
    for k, e in enumerate(povm):
        s = la.sqrtm_psd(e)
        post = la.apply_on_factors(s, rho.mat, rho.dims, [factor])
        red = la.partial_trace(post, rho.dims, rest)
        p = float(np.real(np.trace(red)))
        if p <= NEGLIGIBLE_PROB:
            continue
        probs.append(p)
        states.append(DensityMatrix(red / p, [rho.dims[i] for i in rest], validate=False))
        labels.append(k)
    probs = np.array(probs)
    return LabeledEnsemble(probs / probs.sum(), states, labels)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase correction."""
    rng = as_rng(rng)
    z = rng.complex_normal((d, d))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_isometry(d_in: int, d_out: int, rng=None) -> np.ndarray:
    """First ``d_in`` columns of a Haar unitary on ``C^{d_out}``."""
    if d_out < d_in:
        raise ValidationError(f"an isometry needs d_out >= d_in, got {d_in} -> {d_out}")
    rng = as_rng(rng)
    z = rng.complex_normal((d_out, d_in))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure(dims: Sequence[int] | int, rng=None) -> DensityMatrix:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    rng = as_rng(rng)
    v = rng.complex_normal(int(np.prod(dims)))
    return DensityMatrix.pure(v, dims)


def random_density(dims: Sequence[int] | int, rank: int | None = None, rng=None) -> DensityMatrix:
    """Reduced state of a Haar-random pure state on ``C^d ⊗ C^rank``."""
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    d = int(np.prod(dims))
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ValidationError(f"rank must be in [1, {d}], got {rank}")
    rng = as_rng(rng)
    g = rng.complex_normal((d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.real(np.trace(m)), dims, validate=False)


def random_povm(d: int, outcomes: int, rng=None) -> Povm:
    """Random POVM: ``N_k = S^{-1/2} G_k S^{-1/2}`` with ``G_k`` Wishart and ``S = Σ G_k``."""
    if outcomes < 1:
        raise ValidationError("a POVM needs at least one outcome")
    if outcomes == 1:
        return Povm.trivial(d)
    rng = as_rng(rng)
    gs = []
    for _ in range(outcomes):
        x = rng.complex_normal((d, d))
        gs.append(x @ x.conj().T)
    s_inv = la.inv_sqrtm_psd(sum(gs))
    return Povm([s_inv @ g @ s_inv for g in gs])
