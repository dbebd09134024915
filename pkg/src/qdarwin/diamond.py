"""Diamond-norm distances, Choi-state brackets, and the local-measurement block bound."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg as la
from .channels import QuantumChannel
from .errors import ValidationError
from .sdp import SdpProblem, SdpSolution, solve_sdp
from .states import DensityMatrix, Povm

#: Below this ``d_A ||ΔJ||_1`` the SDP is skipped and the Choi bracket is returned.
NEGLIGIBLE_DISTANCE = 1e-12


@dataclass
class DiamondResult:
    """``value`` is achieved by ``primal_witness``; ``value + dual_gap`` is the dual certificate."""

    value: float
    primal_witness: DensityMatrix
    dual_gap: float
    upper: float
    solution: SdpSolution | None = None


def _check_pair(ch0: QuantumChannel, ch1: QuantumChannel) -> None:
    if ch0.in_dim != ch1.in_dim or ch0.out_dim != ch1.out_dim:
        raise ValidationError(
            f"channels differ in shape: {ch0.in_dim}->{ch0.out_dims} vs {ch1.in_dim}->{ch1.out_dims}")


def diamond_sdp(choi_diff_unnormalized: np.ndarray, d_in: int, d_out: int) -> SdpProblem:
    """SDP whose optimum is half the diamond norm of a trace-annihilating map.

    Variables ``W, Z`` on ``A ⊗ B`` and ``ρ`` on ``A``: maximize ``<J, W>``
    subject to ``W + Z = ρ ⊗ I_B``, ``tr ρ = 1``, all positive.
    """
    n = d_in * d_out
    basis = la.hermitian_basis(n)
    m = n * n + 1
    a_w = np.zeros((m, n, n), dtype=complex)
    a_z = np.zeros((m, n, n), dtype=complex)
    a_r = np.zeros((m, d_in, d_in), dtype=complex)
    a_w[: n * n] = basis
    a_z[: n * n] = basis
    for h in range(n * n):
        a_r[h] = -la.partial_trace(basis[h], (d_in, d_out), [0])
    a_r[-1] = np.eye(d_in)
    b = np.zeros(m)
    b[-1] = 1.0
    c = [-la.hermitian_part(choi_diff_unnormalized), np.zeros((n, n)), np.zeros((d_in, d_in))]
    return SdpProblem((n, n, d_in), c, [a_w, a_z, a_r], b)


def witness_state(rho_ref: np.ndarray) -> DensityMatrix:
    """Pure input ``(sqrt(ρ) ⊗ I)|Ω>`` on reference ⊗ system with reference marginal ``ρ``."""
    d = rho_ref.shape[0]
    vec = la.sqrtm_psd(rho_ref).reshape(-1)
    return DensityMatrix.pure(vec, (d, d))


def _clean_density(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(la.hermitian_part(m))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        w = np.ones_like(w)
    return (v * (w / w.sum())) @ v.conj().T


def diamond_distance(ch0: QuantumChannel, ch1: QuantumChannel, tol: float = 1e-8, max_iter: int = 100) -> DiamondResult:
    """``||Λ_0 - Λ_1||_◇`` by semidefinite programming.

    The reported value is the trace norm reached by the optimal input
    state, so it never exceeds the true distance; ``upper`` is twice the
    negated dual objective.
    """
    _check_pair(ch0, ch1)
    d_in, d_out = ch0.in_dim, ch0.out_dim
    ju = d_in * (ch0.choi - ch1.choi)
    choi_dist = la.trace_norm(ch0.choi - ch1.choi)
    if d_in * choi_dist <= NEGLIGIBLE_DISTANCE:
        # the Choi bracket already pins the value below the solver's resolution
        rho = np.eye(d_in) / d_in
        return DiamondResult(choi_dist, witness_state(rho), (d_in - 1) * choi_dist, d_in * choi_dist, None)
    sol = solve_sdp(diamond_sdp(ju, d_in, d_out), tol=tol, max_iter=max_iter)
    rho = _clean_density(sol.x[2])
    value = witness_value(ju, rho, d_in, d_out)
    upper = max(-2.0 * sol.dual_value, value)
    return DiamondResult(value, witness_state(rho), upper - value, upper, sol)


def witness_value(ju: np.ndarray, rho_ref: np.ndarray, d_in: int, d_out: int) -> float:
    s = np.kron(la.sqrtm_psd(rho_ref), np.eye(d_out))
    return la.trace_norm(la.hermitian_part(s @ ju @ s))


def choi_distance_bounds(ch0: QuantumChannel, ch1: QuantumChannel) -> tuple[float, float, float]:
    """Bracket ``||ΔJ||_1 <= ||Λ_0 - Λ_1||_◇ <= d_A ||ΔJ||_1`` on normalized Choi states.

    Returns ``(lower, choi_trace_distance, upper)``; ``lower`` equals the
    Choi trace distance.
    """
    _check_pair(ch0, ch1)
    dist = la.trace_norm(ch0.choi - ch1.choi)
    return dist, dist, ch0.in_dim * dist


class Lemma5Result(NamedTuple):
    block_max: float
    measured_bound: float
    holds: bool


def lemma5_blocks(l: np.ndarray, d_A: int, d_B: int) -> list[tuple[str, tuple[int, int], np.ndarray]]:
    """Hermitian blocks ``L_ii``, ``L_ij + L_ji`` and ``i(L_ij - L_ji)`` of ``L = Σ |i><j| ⊗ L_ij``."""
    t = l.reshape(d_A, d_B, d_A, d_B)
    out = []
    for i in range(d_A):
        out.append(("diag", (i, i), t[i, :, i, :]))
    for i in range(d_A):
        for j in range(i + 1, d_A):
            lij, lji = t[i, :, j, :], t[j, :, i, :]
            out.append(("sym", (i, j), lij + lji))
            out.append(("antisym", (i, j), 1j * (lij - lji)))
    return out


def lemma5_block_basis(l, d_A: int, d_B: int) -> tuple[float, np.ndarray]:
    """Largest block trace norm and the eigenbasis (columns) of that block."""
    l = la.check_hermitian(l, 1e-9)
    if l.shape[0] != d_A * d_B:
        raise ValidationError(f"L has dimension {l.shape[0]}, expected {d_A} * {d_B}")
    best, best_block = -1.0, None
    for _, _, blk in lemma5_blocks(l, d_A, d_B):
        blk = la.hermitian_part(blk)
        v = float(np.sum(np.abs(np.linalg.eigvalsh(blk))))
        if v > best + 1e-15:
            best, best_block = v, blk
    _, vecs = np.linalg.eigh(best_block)
    return best, vecs


def lemma5_block_measurement(l, d_A: int, d_B: int) -> tuple[float, Povm]:
    """Largest block trace norm and the projective measurement in that block's eigenbasis.

    Measuring ``B`` in this basis preserves the block's trace norm, which is
    what makes ``||(id ⊗ M)(L)||_1 >= block_max``.
    """
    best, vecs = lemma5_block_basis(l, d_A, d_B)
    return best, Povm.from_basis(vecs)


def local_measurement_map(l: np.ndarray, povm: Povm, d_A: int) -> np.ndarray:
    """``(id_A ⊗ M_B)(L)`` for the quantum-classical map of ``povm`` on the second factor."""
    d_B = povm.dim
    t = l.reshape(d_A, d_B, d_A, d_B)
    k = len(povm)
    out = np.zeros((d_A, k, d_A, k), dtype=complex)
    for idx, e in enumerate(povm):
        out[:, idx, :, idx] = np.einsum("ibjc,cb->ij", t, e)
    return out.reshape(d_A * k, d_A * k)


def lemma5_block_bound(l, d_A: int, d_B: int) -> Lemma5Result:
    """Check ``||L||_1 <= d_A^2 · block_max <= d_A^2 ||(id ⊗ M)(L)||_1`` for the block measurement ``M``."""
    l = la.as_matrix(l)
    block_max, povm = lemma5_block_measurement(l, d_A, d_B)
    measured = la.trace_norm(local_measurement_map(l, povm, d_A))
    holds = la.trace_norm(l) <= d_A**2 * block_max + 1e-8 and measured >= block_max - 1e-8
    return Lemma5Result(block_max, measured, bool(holds))
