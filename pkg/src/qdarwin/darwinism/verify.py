"""Per-fragment certification of the measure-and-prepare approximation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import linalg as la
from ..channels import QuantumChannel, effective_fragment_channel
from ..diamond import diamond_distance
from ..errors import SdpConvergenceError, ValidationError
from ..states import Povm, as_rng
from . import bounds
from .extraction import DEFAULT_CAP, ExtractionResult, build_map_approximations, extract_pointer_povm

CHAIN_SLACK = 1e-7


@dataclass
class FragmentRecord:
    index: int | tuple[int, ...]
    diamond_dist: float | None
    choi_dist: float
    cmi_j: float | None
    chain_bound_j: float
    probed: bool
    diamond_upper: float | None = None
    block_max: float | None = None
    measured_local_norm: float | None = None
    checks: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class DarwinismReport:
    per_fragment: list[FragmentRecord]
    average_dist: float | None
    theorem_bound: float
    delta: float
    good_set: list
    markov_holds: bool
    n: int
    t: int
    k: int
    d_A: int
    average_bound: float
    average_bound_holds: bool | None
    measured_average_bound: float
    measured_average_holds: bool | None
    vacuous: bool
    extraction: ExtractionResult = field(repr=False)
    seed: int | None = None
    failed: bool = False

    @property
    def pointer_povm(self) -> Povm:
        return self.extraction.pointer_povm

    @property
    def chain_holds(self) -> bool:
        return all(all(r.checks.values()) for r in self.per_fragment) and self.average_bound_holds is not False \
            and self.measured_average_holds is not False


def _label(group: tuple[int, ...], t: int):
    return group[0] if t == 1 else group


def _certify(ch: QuantumChannel, ext: ExtractionResult, delta: float, k: int, t: int, seed,
             diamond_tol: float, diamond_max_iter: int) -> DarwinismReport:
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    d_A = ch.in_dim
    n = len(ch.out_dims)
    approx = build_map_approximations(ext)
    records = []
    failed = False
    for g in ext.groups:
        lam = effective_fragment_channel(ch, g)
        e = approx[g].to_channel()
        choi_dist = la.trace_norm(lam.choi - e.choi)
        rec = FragmentRecord(index=_label(g, t), diamond_dist=None, choi_dist=choi_dist, cmi_j=None,
                             chain_bound_j=2.0, probed=ext.is_probed(g))
        try:
            res = diamond_distance(lam, e, tol=diamond_tol, max_iter=diamond_max_iter)
            rec.diamond_dist, rec.diamond_upper = res.value, res.upper
        except SdpConvergenceError as exc:
            rec.error = str(exc)
            failed = True
        if rec.diamond_dist is not None:
            rec.checks["lemma6_lower"] = choi_dist <= rec.diamond_dist + CHAIN_SLACK
            rec.checks["lemma6_upper"] = rec.diamond_dist <= d_A * choi_dist + CHAIN_SLACK
            rec.checks["at_most_two"] = rec.diamond_dist <= 2.0 + CHAIN_SLACK
        fc = ext.cmi.get(g)
        if fc is not None:
            rec.cmi_j = fc.cmi
            rec.chain_bound_j = bounds.chain_bound(d_A, fc.cmi)
            rec.block_max, rec.measured_local_norm = fc.block_max, fc.measured_norm
            pinsker = float(np.sqrt(2.0 * bounds.LN2 * fc.cmi))
            rec.checks["lemma5_block"] = choi_dist <= d_A**2 * fc.block_max + CHAIN_SLACK
            rec.checks["lemma5_measured"] = fc.block_max <= fc.measured_norm + CHAIN_SLACK
            rec.checks["pinsker"] = fc.measured_norm <= pinsker + CHAIN_SLACK
            if rec.diamond_dist is not None:
                rec.checks["chain"] = rec.diamond_dist <= rec.chain_bound_j + CHAIN_SLACK
        records.append(rec)

    dists = [r.diamond_dist for r in records if r.diamond_dist is not None]
    average = float(np.mean(dists)) if len(dists) == len(records) else None
    avg_bound = bounds.average_bound(d_A, n, k, t)
    unprobed = [r for r in records if not r.probed and r.diamond_dist is not None]
    measured_bound = bounds.chain_bound(d_A, ext.avg_cmi) if ext.cmi else float("nan")
    measured_holds = None
    if unprobed and len(unprobed) == len(ext.cmi):
        measured_holds = float(np.mean([r.diamond_dist for r in unprobed])) <= measured_bound + CHAIN_SLACK
    theorem = bounds.theorem1_bound(d_A, n, delta) if t == 1 else bounds.theorem2_bound(d_A, n, t, delta)
    good = [r.index for r in records if r.diamond_dist is not None and r.diamond_dist <= theorem]
    markov = len(good) >= (1.0 - delta) * len(records)
    return DarwinismReport(
        per_fragment=records, average_dist=average, theorem_bound=theorem, delta=float(delta), good_set=good,
        markov_holds=bool(markov), n=n, t=t, k=k, d_A=d_A, average_bound=avg_bound,
        average_bound_holds=None if average is None else bool(average <= avg_bound + CHAIN_SLACK),
        measured_average_bound=measured_bound,
        measured_average_holds=None if measured_holds is None else bool(measured_holds),
        vacuous=bounds.is_vacuous(theorem), extraction=ext, seed=seed, failed=failed)


def _seed_of(rng) -> int | None:
    return getattr(rng, "seed", rng if isinstance(rng, int) else None)


def verify_theorem2(ch: QuantumChannel, t: int, delta: float, k: int, rng=None, *, probe_strategy: str = "greedy",
                    restarts: int = 20, cap: int = DEFAULT_CAP, diamond_tol: float = 1e-8,
                    diamond_max_iter: int = 100) -> DarwinismReport:
    """Certify every ``t``-subset of fragments against its measure-and-prepare approximation.

    Probing acts on consecutive blocks of ``t`` fragments; ``k`` is the
    number of blocks that may be probed.
    """
    seed = _seed_of(rng)
    rng = as_rng(rng)
    ext = extract_pointer_povm(ch, k, probe_strategy, rng, t=t, restarts=restarts, cap=cap)
    return _certify(ch, ext, delta, k, t, seed, diamond_tol, diamond_max_iter)


def verify_theorem1(ch: QuantumChannel, delta: float, k: int, rng=None, **kwargs) -> DarwinismReport:
    """Certify every single fragment; identical to :func:`verify_theorem2` with ``t = 1``."""
    return verify_theorem2(ch, 1, delta, k, rng, **kwargs)
