"""Agreement between observers who read different fragments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .. import linalg as la
from ..channels import MeasurePrepareChannel
from ..errors import ValidationError
from ..infotheory import clean_povm, guessing_probability
from ..sdp import SdpProblem, solve_sdp
from ..states import DensityMatrix, LabeledEnsemble, Povm, as_density, as_rng, haar_unitary


@dataclass
class AgreementReport:
    per_fragment_guess: list[float]
    per_fragment_guess_grid: list[float]
    joint_agreement: float
    joint_agreement_grid: float
    prop3_bound: float
    delta: float
    hypothesis_holds: bool
    implication_holds: bool
    worst_case_state: DensityMatrix
    fragment_povms: list[Povm] = field(repr=False)
    grid_size: int = 0


def pure_state_grid(d: int, size: int = 200, rng=None) -> list[np.ndarray]:
    """Computational basis vectors followed by ``size`` Haar-random pure states."""
    rng = as_rng(rng)
    out = [np.eye(d, dtype=complex)[:, k] for k in range(d)]
    for i in range(size):
        out.append(haar_unitary(d, rng.child(i))[:, 0])
    return out


def _robust_povm(povm: Povm, preps: Sequence[DensityMatrix], tol: float) -> Povm:
    """POVM ``{N_k}`` maximizing ``λ_min(Σ_k tr(N_k σ_k) M_k)``.

    By the minimax theorem this value equals the worst-case guessing
    probability over input states. Variables: ``N_k``, a scalar ``s`` and a
    slack ``T`` with ``Σ_k tr(N_k σ_k) M_k - s I - T = 0``.
    """
    d_B = preps[0].dim
    d_A = povm.dim
    m = len(povm)
    hb, ha = la.hermitian_basis(d_B), la.hermitian_basis(d_A)
    nb, na = len(hb), len(ha)
    rows = nb + na
    blocks = [np.zeros((rows, d_B, d_B), dtype=complex) for _ in range(m)]
    for k in range(m):
        blocks[k][:nb] = hb
        for h in range(na):
            blocks[k][nb + h] = np.real(np.trace(ha[h] @ povm[k])) * preps[k].mat
    s_block = np.zeros((rows, 1, 1), dtype=complex)
    t_block = np.zeros((rows, d_A, d_A), dtype=complex)
    for h in range(na):
        s_block[nb + h, 0, 0] = -np.real(np.trace(ha[h]))
        t_block[nb + h] = -ha[h]
    b = np.concatenate([[np.real(np.trace(h)) for h in hb], np.zeros(na)])
    c = [np.zeros((d_B, d_B))] * m + [-np.ones((1, 1)), np.zeros((d_A, d_A))]
    prob = SdpProblem((d_B,) * m + (1, d_A), c, blocks + [s_block, t_block], b)
    sol = solve_sdp(prob, tol=tol)
    return clean_povm(sol.x[:m])


def _worst_case(povm: Povm, weights: np.ndarray) -> tuple[float, np.ndarray]:
    op = sum(w * m for w, m in zip(weights, povm))
    vals, vecs = np.linalg.eigh(la.hermitian_part(op))
    return float(vals[0]), vecs[:, 0]


def _grid_guess(povm: Povm, preps, grid) -> float:
    best = np.inf
    for v in grid:
        probs = np.array([max(float(np.real(np.vdot(v, m @ v))), 0.0) for m in povm])
        probs = probs / probs.sum()
        keep = probs > 0
        ens = LabeledEnsemble(probs[keep], [p for p, k in zip(preps, keep) if k])
        best = min(best, guessing_probability(ens)[0])
    return float(best)


def outcome_agreement(mp_channels: Mapping | Sequence[MeasurePrepareChannel], joint_preps: Sequence, state_grid=None,
                      delta: float | None = None, grid_size: int = 200, rng=None, tol: float = 1e-10) -> AgreementReport:
    """Worst-case probability that ``t`` observers all read the pointer outcome.

    ``mp_channels`` are the fragment approximations (one per observer,
    sharing a POVM); ``joint_preps[z]`` is the joint state of the observed
    fragments given outcome ``z``, with factors in the order of
    ``mp_channels``. Per-fragment worst-case guessing probabilities are
    computed exactly by a minimax SDP and also estimated on a pure-state grid.
    ``delta`` defaults to one minus the smallest per-fragment guess.
    """
    chans = list(mp_channels.values()) if isinstance(mp_channels, Mapping) else list(mp_channels)
    if not chans:
        raise ValidationError("need at least one fragment channel")
    povm = chans[0].povm
    m = len(povm)
    for c in chans[1:]:
        if len(c.povm) != m or any(np.max(np.abs(a - b)) > 1e-9 for a, b in zip(c.povm, povm)):
            raise ValidationError("fragment channels do not share one pointer POVM")
    if len(joint_preps) != m:
        raise ValidationError(f"need one joint state per outcome: {m} outcomes, {len(joint_preps)} joint states")
    t = len(chans)
    frag_dims = [c.preparations[0].dim for c in chans]
    joint = [as_density(s) for s in joint_preps]
    for z, s in enumerate(joint):
        if s.dim != int(np.prod(frag_dims)):
            raise ValidationError(f"joint state {z} has dimension {s.dim}, fragments multiply to {int(np.prod(frag_dims))}")

    grid = pure_state_grid(povm.dim, grid_size, rng) if state_grid is None else [np.asarray(v, dtype=complex) for v in state_grid]
    fragment_povms, guesses, grid_guesses = [], [], []
    for c in chans:
        n_povm = _robust_povm(povm, c.preparations, tol)
        weights = np.array([np.real(np.trace(n @ s.mat)) for n, s in zip(n_povm, c.preparations)])
        guesses.append(_worst_case(povm, weights)[0])
        grid_guesses.append(_grid_guess(povm, c.preparations, grid))
        fragment_povms.append(n_povm)

    weights = []
    for z in range(m):
        op = la.kron(*[fp[z] for fp in fragment_povms])
        weights.append(float(np.real(np.trace(op @ joint[z].mat))))
    weights = np.array(weights)
    joint_value, worst = _worst_case(povm, weights)
    grid_joint = min(float(sum(w * np.real(np.vdot(v, mk @ v)) for w, mk in zip(weights, povm))) for v in grid)

    if delta is None:
        delta = max(0.0, 1.0 - min(guesses))
        hypothesis = True
    else:
        hypothesis = min(grid_guesses) >= 1.0 - delta - 1e-12
    bound = 1.0 - 6.0 * t * delta**0.25
    implication = (not hypothesis) or joint_value >= bound - 1e-6
    return AgreementReport(
        per_fragment_guess=guesses, per_fragment_guess_grid=grid_guesses, joint_agreement=joint_value,
        joint_agreement_grid=grid_joint, prop3_bound=bound, delta=float(delta), hypothesis_holds=bool(hypothesis),
        implication_holds=bool(implication), worst_case_state=DensityMatrix.pure(worst), fragment_povms=fragment_povms,
        grid_size=len(grid))
