"""CPTP maps, their Choi states, and the model library.

The canonical representation is the normalized Choi state

    J(Λ) = (id ⊗ Λ)(Φ),   Φ = d_A^{-1} Σ_{k,k'} |kk><k'k'|,

on ``A ⊗ B_1 ⊗ ... ⊗ B_n`` (input factor first). Under this convention
``Λ(X) = d_A tr_A[(X^T ⊗ I) J(Λ)]``. Kraus operators are derived from the
Choi state on demand and cached.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import ValidationError
from .states import DensityMatrix, Povm, as_density, as_rng, haar_isometry

KRAUS_CUTOFF = 1e-11
CPTP_TOL = 1e-9


class QuantumChannel:
    """Completely positive trace-preserving map ``D(C^in_dim) -> D(⊗ out_dims)``.

    Build with :meth:`from_kraus`, :meth:`from_isometry` or
    :meth:`from_choi`; ``representation`` records which one was used.
    """

    def __init__(self, choi, in_dim: int, out_dims: Sequence[int], *, representation: str = "choi",
                 kraus=None, validate: bool = True):
        choi = la.hermitian_part(la.as_matrix(choi))
        self.in_dim = int(in_dim)
        self.out_dims = tuple(int(d) for d in out_dims)
        la.check_dims((self.in_dim,) + self.out_dims, choi.shape[0])
        choi.setflags(write=False)
        self.choi = choi
        self.representation = representation
        self._kraus = None if kraus is None else [la.as_matrix(k) for k in kraus]
        if validate:
            self._validate()

    @property
    def out_dim(self) -> int:
        return int(np.prod(self.out_dims))

    @property
    def choi_dims(self) -> tuple[int, ...]:
        return (self.in_dim,) + self.out_dims

    def _validate(self) -> None:
        wmin = float(np.min(la.eigvalsh(self.choi)))
        if wmin < -1e-10:
            raise ValidationError(f"Choi matrix is not positive semidefinite (eigenvalue {wmin:.3e})")
        marg = la.partial_trace(self.choi, self.choi_dims, [0])
        dev = float(np.max(np.abs(marg - np.eye(self.in_dim) / self.in_dim)))
        if dev > CPTP_TOL:
            raise ValidationError(f"map is not trace preserving: Choi input marginal deviates from I/d by {dev:.3e}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus, out_dims: Sequence[int] | None = None) -> "QuantumChannel":
        ks = [la.as_matrix(k) for k in kraus]
        if not ks:
            raise ValidationError("need at least one Kraus operator")
        d_out, d_in = ks[0].shape
        if any(k.shape != (d_out, d_in) for k in ks):
            raise ValidationError("Kraus operators must share one shape")
        dev = float(np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(d_in))))
        if dev > CPTP_TOL:
            raise ValidationError(f"Kraus operators violate Σ K†K = I by {dev:.3e}")
        out_dims = (d_out,) if out_dims is None else tuple(out_dims)
        choi = _choi_from_kraus(ks, d_in)
        return cls(choi, d_in, out_dims, representation="kraus", kraus=ks, validate=False)

    @classmethod
    def from_isometry(cls, v, out_dims: Sequence[int] | None = None) -> "QuantumChannel":
        v = la.as_matrix(v)
        dev = float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))
        if dev > 1e-10:
            raise ValidationError(f"V†V deviates from identity by {dev:.3e}")
        out_dims = (v.shape[0],) if out_dims is None else tuple(out_dims)
        choi = _choi_from_kraus([v], v.shape[1])
        return cls(choi, v.shape[1], out_dims, representation="isometry", kraus=[v], validate=False)

    @classmethod
    def from_choi(cls, choi, in_dim: int, out_dims: Sequence[int]) -> "QuantumChannel":
        return cls(choi, in_dim, out_dims, representation="choi")

    @classmethod
    def identity(cls, d: int) -> "QuantumChannel":
        return cls.from_isometry(np.eye(d))

    @classmethod
    def replacer(cls, sigma, d_in: int) -> "QuantumChannel":
        """Constant channel ``X ↦ tr(X) σ``."""
        sigma = as_density(sigma)
        choi = np.kron(np.eye(d_in) / d_in, sigma.mat)
        return cls(choi, d_in, sigma.dims, representation="choi", validate=False)

    # -- derived forms ------------------------------------------------------

    @property
    def kraus(self) -> list[np.ndarray]:
        if self._kraus is None:
            self._kraus = _kraus_from_choi(self.choi, self.in_dim, self.out_dim)
        return self._kraus

    @property
    def isometry(self) -> np.ndarray:
        """Stinespring isometry ``V = Σ_i K_i ⊗ |i>`` (environment factor last)."""
        ks = self.kraus
        r = len(ks)
        return np.stack(ks, axis=-1).reshape(self.out_dim, self.in_dim, r).transpose(0, 2, 1).reshape(self.out_dim * r, self.in_dim)

    def __call__(self, rho):
        return apply(self, rho)

    def __repr__(self) -> str:
        return f"QuantumChannel({self.in_dim} -> {self.out_dims}, {self.representation})"


def _choi_from_kraus(ks, d_in: int) -> np.ndarray:
    d_out = ks[0].shape[0]
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in ks:
        # (I ⊗ K)|Ω>, entries v[a, b] = K[b, a]
        v = k.T.reshape(-1)
        j += np.outer(v, v.conj())
    return j / d_in


def _kraus_from_choi(choi, d_in: int, d_out: int) -> list[np.ndarray]:
    w, v = np.linalg.eigh(la.hermitian_part(choi * d_in))
    ks = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam < KRAUS_CUTOFF:
            break
        ks.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    if not ks:
        raise ValidationError("Choi matrix has no eigenvalue above the Kraus cutoff")
    return ks


def apply(ch: QuantumChannel, rho, via: str = "kraus") -> DensityMatrix:
    """Evaluate ``Λ(ρ)``; ``via`` selects the Kraus or Choi formula."""
    m = rho.mat if isinstance(rho, DensityMatrix) else la.as_matrix(rho)
    if m.shape != (ch.in_dim, ch.in_dim):
        raise ValidationError(f"channel input dimension {ch.in_dim} does not match state dimension {m.shape[0]}")
    if via == "kraus":
        out = sum(k @ m @ k.conj().T for k in ch.kraus)
    elif via == "choi":
        t = ch.choi.reshape(ch.in_dim, ch.out_dim, ch.in_dim, ch.out_dim)
        # tr_A[(X^T ⊗ I) J] contracts X_ab with J[(a,.),(b,.)]
        out = ch.in_dim * np.einsum("ab,aibj->ij", m, t)
    else:
        raise ValueError(f"unknown evaluation route {via!r}")
    return DensityMatrix(la.hermitian_part(out), ch.out_dims, validate=False)


def apply_local(ch: QuantumChannel, rho, factor: int) -> DensityMatrix:
    """Apply ``ch`` to one tensor factor of ``rho``.

    The channel's output factors replace the input factor in place.
    """
    rho = as_density(rho)
    dims = list(rho.dims)
    if dims[factor] != ch.in_dim:
        raise ValidationError(f"factor {factor} has dimension {dims[factor]}, channel expects {ch.in_dim}")
    n = len(dims)
    order = [factor] + [i for i in range(n) if i != factor]
    m = la.permute_factors(rho.mat, dims, order)
    d_rest = rho.dim // ch.in_dim
    t = m.reshape(ch.in_dim, d_rest, ch.in_dim, d_rest)
    out = np.zeros((ch.out_dim, d_rest, ch.out_dim, d_rest), dtype=complex)
    for k in ch.kraus:
        out += np.einsum("ab,bjcl,dc->ajdl", k, t, k.conj())
    out = out.reshape(ch.out_dim * d_rest, ch.out_dim * d_rest)
    no = len(ch.out_dims)
    pdims = list(ch.out_dims) + [dims[i] for i in order[1:]]
    # move output block back to the position of ``factor``
    rest_positions = list(range(no, no + n - 1))
    new_order = rest_positions[:factor] + list(range(no)) + rest_positions[factor:]
    out = la.permute_factors(out, pdims, new_order)
    new_dims = dims[:factor] + list(ch.out_dims) + dims[factor + 1:]
    return DensityMatrix(la.hermitian_part(out), new_dims, validate=False)


def choi_of(ch: QuantumChannel) -> DensityMatrix:
    """Normalized Choi state on ``A ⊗ out``."""
    return DensityMatrix(ch.choi, ch.choi_dims, validate=False)


def effective_fragment_channel(ch: QuantumChannel, keep) -> QuantumChannel:
    """``tr_{\\keep} ∘ Λ``: the channel onto the listed output factors."""
    keep = la._normalize_indices(keep, len(ch.out_dims))
    if not keep:
        raise ValidationError("keep must name at least one output factor")
    if len(keep) == len(ch.out_dims):
        return ch
    choi = la.partial_trace(ch.choi, ch.choi_dims, [0] + [k + 1 for k in keep])
    return QuantumChannel(choi, ch.in_dim, [ch.out_dims[k] for k in keep], validate=False)


@dataclass(frozen=True, eq=False)
class MeasurePrepareChannel:
    """``X ↦ Σ_k tr(M_k X) σ_k``."""

    povm: Povm
    preparations: tuple[DensityMatrix, ...]

    def __post_init__(self):
        preps = tuple(as_density(s) for s in self.preparations)
        object.__setattr__(self, "preparations", preps)
        if len(preps) != len(self.povm):
            raise ValidationError(f"{len(self.povm)} POVM elements but {len(preps)} preparations")
        if len({s.dim for s in preps}) != 1:
            raise ValidationError("preparations must share one output dimension")

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.preparations[0].dims

    def choi(self) -> np.ndarray:
        d = self.povm.dim
        return sum(np.kron(m.T / d, s.mat) for m, s in zip(self.povm, self.preparations))

    def to_channel(self) -> QuantumChannel:
        return QuantumChannel(self.choi(), self.povm.dim, self.out_dims, representation="choi", validate=False)


def measure_and_prepare(povm: Povm, preps) -> QuantumChannel:
    return MeasurePrepareChannel(povm, tuple(preps)).to_channel()


def flag_states(m: int) -> list[DensityMatrix]:
    return [DensityMatrix.basis(m, k) for k in range(m)]


def qc_channel(povm: Povm) -> QuantumChannel:
    """``X ↦ Σ_k tr(M_k X) |k><k|`` with orthonormal flags."""
    return measure_and_prepare(povm, flag_states(len(povm)))


# -- model library -------------------------------------------------------------

def model_broadcast_classical(d: int, n: int) -> QuantumChannel:
    """``X ↦ Σ_k <k|X|k> (|k><k|)^{⊗n}``."""
    if d < 1 or n < 1:
        raise ValidationError("d and n must be positive")
    ks = []
    for k in range(d):
        op = np.zeros((d**n, d), dtype=complex)
        op[sum(k * d**p for p in range(n)), k] = 1.0
        ks.append(op)
    return QuantumChannel.from_kraus(ks, (d,) * n)


def model_cnot_cascade(n: int) -> QuantumChannel:
    """Coherent branching isometry ``|b> ↦ |b>^{⊗n}`` on a qubit."""
    if n < 1:
        raise ValidationError("n must be positive")
    v = np.zeros((2**n, 2), dtype=complex)
    v[0, 0] = 1.0
    v[2**n - 1, 1] = 1.0
    return QuantumChannel.from_isometry(v, (2,) * n)


def _swap(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            s[b * d + a, a * d + b] = 1.0
    return s


def model_partial_swap(n: int, angle: float) -> QuantumChannel:
    """Sequential partial swaps of a system qubit with ``n`` blank fragments.

    Each step applies ``cos(angle) I - i sin(angle) SWAP`` between the
    system and the next fragment (initially ``|0>``); the system is traced
    out at the end. ``angle = 0`` leaves every fragment blank and
    ``angle = π/2`` swaps the input entirely into the first fragment.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    if not 0.0 <= angle <= np.pi / 2 + 1e-12:
        raise ValidationError(f"angle must lie in [0, π/2], got {angle}")
    u2 = np.cos(angle) * np.eye(4) - 1j * np.sin(angle) * _swap(2)
    # factors: S, B_1..B_n ; start with S ⊗ |0..0>
    blank = np.zeros(2**n)
    blank[0] = 1.0
    v = np.kron(np.eye(2), blank.reshape(-1, 1))  # (dim, 2)
    for j in range(n):
        # unitary acting on factors (0, j+1)
        v = _embed_pair(u2, n + 1, j + 1) @ v
    # Kraus operators: <s|_S V
    t = v.reshape(2, 2**n, 2)
    ks = [t[s] for s in range(2)]
    return QuantumChannel.from_kraus(ks, (2,) * n)


def _embed_pair(u2: np.ndarray, nfac: int, j: int) -> np.ndarray:
    """Operator ``u2`` on qubit factors (0, j) of ``nfac`` qubits."""
    dim = 2**nfac
    return la.apply_on_factors(u2, np.eye(dim, dtype=complex), [2] * nfac, [0, j], side="left")


def model_haar_env(d_A: int, fragment_dims: Sequence[int], rng=None) -> QuantumChannel:
    """Haar-random isometry from ``C^{d_A}`` into ``⊗ fragment_dims``."""
    fragment_dims = tuple(int(d) for d in fragment_dims)
    d_out = int(np.prod(fragment_dims))
    if d_out < d_A:
        raise ValidationError(f"fragments of total dimension {d_out} cannot hold a {d_A}-dimensional input")
    v = haar_isometry(d_A, d_out, as_rng(rng))
    return QuantumChannel.from_isometry(v, fragment_dims)


# -- serialization ----------------------------------------------------------------

def channel_to_dict(ch: QuantumChannel) -> dict:
    return {
        "in_dim": ch.in_dim,
        "out_dims": list(ch.out_dims),
        "choi": {"re": ch.choi.real.tolist(), "im": ch.choi.imag.tolist()},
    }


def channel_from_dict(data: dict) -> QuantumChannel:
    try:
        re = np.asarray(data["choi"]["re"], dtype=float)
        im = np.asarray(data["choi"]["im"], dtype=float)
        in_dim = int(data["in_dim"])
        out_dims = [int(d) for d in data["out_dims"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed channel document: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise ValidationError("choi.re and choi.im must be equal-shape matrices")
    return QuantumChannel(re + 1j * im, in_dim, out_dims, representation="choi")


def dumps_channel(ch: QuantumChannel) -> str:
    return json.dumps(channel_to_dict(ch))


def loads_channel(text: str) -> QuantumChannel:
    return channel_from_dict(json.loads(text))
