"""Pointer-POVM extraction from the Choi state of a fragmenting channel.

A few fragments (or blocks of fragments) are probed with projective
measurements; conditioning the Choi state on the joint outcome ``z``
gives an ensemble ``{p(z), ρ_A^z}`` whose transposes, scaled by ``d_A``,
form a POVM shared by every fragment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .. import linalg as la
from ..channels import MeasurePrepareChannel, QuantumChannel
from ..diamond import lemma5_block_basis, local_measurement_map
from ..errors import ExtractionError, ValidationError
from ..infotheory import qc_mutual_information
from ..states import DensityMatrix, Povm, as_rng, haar_unitary

#: Outcomes below this probability are merged into one residual outcome.
RARE_PROB = 1e-10
#: Outcomes below this are treated as impossible.
DEGENERATE_PROB = 1e-12
DEFAULT_CAP = 64
TIE_TOL = 1e-12

Group = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ConditionalEnsemble:
    """``{p(z), ρ_A^z, ρ_{B_g}^z}`` for one fragment group ``g``."""

    probs: np.ndarray
    a_states: tuple[np.ndarray, ...]
    b_states: tuple[DensityMatrix, ...]


@dataclass(frozen=True)
class FragmentCmi:
    """Conditional MI of one unprobed group measured with its block measurement."""

    cmi: float
    block_max: float
    measured_norm: float
    povm: Povm = field(repr=False)


@dataclass
class ExtractionResult:
    d_A: int
    fragment_dims: tuple[int, ...]
    groups: list[Group]
    probe_units: list[Group]
    probe_povms: list[Povm]
    outcomes: list[tuple | None]
    probs: np.ndarray
    pointer_povm: Povm
    conditional_ensembles: dict[Group, ConditionalEnsemble]
    cmi: dict[Group, FragmentCmi]
    avg_cmi: float
    scan: list[tuple[int, float]]
    residual_weight: float
    branch_states: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def probed_set(self) -> tuple[int, ...]:
        return tuple(sorted(f for u in self.probe_units for f in u))

    def is_probed(self, group: Group) -> bool:
        return bool(set(group) & set(self.probed_set))


def fragment_groups(n: int, t: int) -> tuple[list[Group], list[Group]]:
    """All ``t``-subsets of ``n`` fragments and the consecutive ``t``-blocks used as probe units."""
    if not 1 <= t <= n:
        raise ValidationError(f"t must satisfy 1 <= t <= n, got t={t}, n={n}")
    groups = [tuple(c) for c in combinations(range(n), t)]
    units = [tuple(range(i * t, (i + 1) * t)) for i in range(n // t)]
    return groups, units


def check_cap(ch: QuantumChannel, cap: int = DEFAULT_CAP) -> None:
    side = ch.in_dim * ch.out_dim
    if side > cap:
        raise ValidationError(f"Choi dimension {side} exceeds the desk-scale cap of {cap}")


def _branch(branches, unit: Group, basis: np.ndarray, dims) -> list:
    factors = [f + 1 for f in unit]
    out = []
    for label, p, tau in branches:
        for b in range(basis.shape[1]):
            proj = np.outer(basis[:, b], basis[:, b].conj())
            t2 = la.apply_on_factors(proj, tau, dims, factors)
            p2 = float(np.real(np.trace(t2)))
            out.append((label + (b,), p2, t2))
    return out


def _reduced(branches, group: Group, dims) -> list[tuple[float, np.ndarray]]:
    keep = [0] + [f + 1 for f in group]
    return [(p, la.partial_trace(tau, dims, keep)) for _, p, tau in branches if p >= RARE_PROB]


def _correlation_operator(reds, d_A: int, d_g: int) -> np.ndarray:
    """``Σ_z (τ^z_{AB} - τ^z_A ⊗ τ^z_B / p_z)`` for unnormalized conditional states ``τ^z``."""
    dims = (d_A, d_g)
    l = np.zeros((d_A * d_g, d_A * d_g), dtype=complex)
    for p, r in reds:
        l += r - np.kron(la.partial_trace(r, dims, [0]), la.partial_trace(r, dims, [1])) / p
    return la.hermitian_part(l)


def group_cmi(branches, group: Group, dims) -> FragmentCmi:
    """``Σ_z p(z) I(A:B_g)`` after measuring ``B_g`` with the block measurement of its correlation operator."""
    d_A = dims[0]
    d_g = int(np.prod([dims[f + 1] for f in group]))
    reds = _reduced(branches, group, dims)
    l = _correlation_operator(reds, d_A, d_g)
    block_max, basis = lemma5_block_basis(l, d_A, d_g)
    povm = Povm.from_basis(basis)
    measured = la.trace_norm(local_measurement_map(l, povm, d_A))
    cmi = sum(p * qc_mutual_information(r / p, d_A, d_g, povm.elements) for p, r in reds)
    return FragmentCmi(max(float(cmi), 0.0), block_max, measured, povm)


def _avg_cmi(branches, targets, dims) -> float:
    return float(np.mean([group_cmi(branches, g, dims).cmi for g in targets]))


def _disjoint(groups, probed: set) -> list[Group]:
    return [g for g in groups if not probed.intersection(g)]


def extract_pointer_povm(ch: QuantumChannel, k: int, probe_strategy: str = "greedy", rng=None, *,
                         t: int = 1, restarts: int = 20, cap: int = DEFAULT_CAP) -> ExtractionResult:
    """Probe at most ``k`` units and build the shared pointer POVM.

    Probe units are single fragments (``t = 1``) or consecutive blocks of
    ``t`` fragments. Each greedy step tries, for every unprobed unit, the
    block measurement of that unit's correlation with ``A`` and
    ``restarts`` Haar-random bases, keeping the one that minimizes the mean
    conditional MI of the groups still unprobed. The number of probes is
    then chosen among ``0..k`` by the same criterion (ties go to fewer
    probes). ``probe_strategy='block'`` skips the random bases.
    """
    if probe_strategy not in ("greedy", "block"):
        raise ValidationError(f"unknown probe strategy {probe_strategy!r}; expected 'greedy' or 'block'")
    check_cap(ch, cap)
    n = len(ch.out_dims)
    groups, units = fragment_groups(n, t)
    if not 0 <= k < len(units):
        raise ValidationError(f"probe budget k={k} must satisfy 0 <= k < {len(units)} (number of probe units)")
    rng = as_rng(rng)
    dims = ch.choi_dims
    d_A = ch.in_dim

    branches = [((), 1.0, np.array(ch.choi))]
    history = [(branches, [], [])]
    scan = [(0, _avg_cmi(branches, groups, dims))]
    chosen_units: list[Group] = []
    chosen_bases: list[np.ndarray] = []
    for step in range(k):
        probed = {f for u in chosen_units for f in u}
        best = None
        for ui, u in enumerate(units):
            if u in chosen_units:
                continue
            targets = _disjoint(groups, probed | set(u))
            if not targets:
                continue
            d_u = int(np.prod([dims[f + 1] for f in u]))
            reds = _reduced(branches, u, dims)
            _, block = lemma5_block_basis(_correlation_operator(reds, d_A, d_u), d_A, d_u)
            cands = [block]
            if probe_strategy == "greedy":
                stream = rng.child(step).child(ui)
                cands += [haar_unitary(d_u, stream.child(r)) for r in range(restarts)]
            for basis in cands:
                nb = _branch(branches, u, basis, dims)
                val = _avg_cmi(nb, targets, dims)
                if best is None or val < best[0] - TIE_TOL:
                    best = (val, u, basis, nb)
        if best is None:
            break
        val, u, basis, branches = best
        chosen_units = chosen_units + [u]
        chosen_bases = chosen_bases + [basis]
        history.append((branches, chosen_units, chosen_bases))
        scan.append((step + 1, val))

    q = 0
    for i, (_, v) in enumerate(scan):
        if v < scan[q][1] - TIE_TOL:
            q = i
    branches, chosen_units, chosen_bases = history[q]
    return _finalize(ch, groups, branches, chosen_units, chosen_bases, scan)


def _pointer_key(m: np.ndarray) -> tuple:
    return tuple(-np.round(np.real(np.diag(m)), 9)) + tuple(np.round(np.real(m).ravel(), 9))


def _finalize(ch, groups, branches, units, bases, scan) -> ExtractionResult:
    dims = ch.choi_dims
    d_A = ch.in_dim
    kept = [b for b in branches if b[1] >= RARE_PROB]
    rare = [b for b in branches if b[1] < RARE_PROB]
    if not kept or sum(b[1] for b in kept) < DEGENERATE_PROB:
        raise ExtractionError("every probe outcome has negligible probability")
    tau_a = {id(b): la.partial_trace(b[2], dims, [0]) for b in branches}
    kept.sort(key=lambda b: _pointer_key(d_A * tau_a[id(b)].T))
    elements = [d_A * tau_a[id(b)].T for b in kept]
    outcomes: list[tuple | None] = [b[0] for b in kept]
    probs = [b[1] for b in kept]
    residual = float(sum(b[1] for b in rare))
    if rare:
        elements.append(d_A * sum(tau_a[id(b)] for b in rare).T)
        outcomes.append(None)
        probs.append(residual)
    pointer = Povm([la.hermitian_part(e) for e in elements])
    probs = np.array(probs)

    a_states = [tau_a[id(b)] / b[1] for b in kept]
    if rare:
        a_states.append(elements[-1].T / (d_A * residual) if residual > 0 else np.eye(d_A) / d_A)
    ensembles = {}
    for g in groups:
        gdims = [dims[f + 1] for f in g]
        d_g = int(np.prod(gdims))
        b_states = [DensityMatrix(la.partial_trace(b[2], dims, [f + 1 for f in g]) / b[1], gdims, validate=False)
                    for b in kept]
        if rare:
            b_states.append(DensityMatrix(np.eye(d_g) / d_g, gdims, validate=False))
        ensembles[g] = ConditionalEnsemble(probs, tuple(a_states), tuple(b_states))

    probed = {f for u in units for f in u}
    cmis = {g: group_cmi(branches, g, dims) for g in _disjoint(groups, probed)}
    avg = float(np.mean([c.cmi for c in cmis.values()])) if cmis else float("nan")
    return ExtractionResult(
        d_A=d_A, fragment_dims=ch.out_dims, groups=groups, probe_units=list(units),
        probe_povms=[Povm.from_basis(b) for b in bases], outcomes=outcomes, probs=probs,
        pointer_povm=pointer, conditional_ensembles=ensembles, cmi=cmis, avg_cmi=avg, scan=list(scan),
        residual_weight=residual, branch_states=[b[2] / b[1] for b in kept])


def build_map_approximations(ext: ExtractionResult) -> dict[Group, MeasurePrepareChannel]:
    """``E_g(X) = Σ_z tr(M_z X) ρ^z_{B_g}`` for every group, all sharing ``ext.pointer_povm``."""
    return {g: MeasurePrepareChannel(ext.pointer_povm, ens.b_states) for g, ens in ext.conditional_ensembles.items()}


def joint_conditional_states(ext: ExtractionResult, fragments: Sequence[int]) -> list[DensityMatrix]:
    """``ρ^z_{B_{j_1}...B_{j_t}}`` for each kept outcome, plus ``I/d`` for the residual outcome."""
    fragments = sorted(int(f) for f in fragments)
    dims = (ext.d_A,) + ext.fragment_dims
    gdims = [dims[f + 1] for f in fragments]
    out = [DensityMatrix(la.partial_trace(s, dims, [f + 1 for f in fragments]), gdims, validate=False)
           for s in ext.branch_states]
    if ext.outcomes and ext.outcomes[-1] is None:
        d = int(np.prod(gdims))
        out.append(DensityMatrix(np.eye(d) / d, gdims, validate=False))
    return out
