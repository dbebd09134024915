"""Entropic quantities in bits, the standard continuity/contraction lemmas,
state discrimination, and accessible information.

Factor arguments (``a``, ``b``, ``c``) name tensor factors of a
:class:`DensityMatrix`; each may be a single index or a list of indices.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from . import linalg as la
from .errors import ValidationError
from .sdp import SdpProblem, solve_sdp
from .states import DensityMatrix, LabeledEnsemble, Povm, as_density, as_rng, haar_isometry

LN2 = np.log(2.0)
#: Eigenvalues below this are treated as zero inside logarithms.
EIG_FLOOR = 1e-12


def h2(p: float) -> float:
    """Binary entropy in bits."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def _entropy_of(m: np.ndarray) -> float:
    w = la.eigvalsh(m)
    w = w[w > EIG_FLOOR]
    return float(-np.sum(w * np.log2(w)))


def entropy(rho) -> float:
    """Von Neumann entropy ``-tr ρ log2 ρ``."""
    rho = as_density(rho)
    return max(_entropy_of(rho.mat), 0.0)


def _factors(idx, n: int) -> list[int]:
    if idx is None:
        return []
    return la._normalize_indices(idx, n)


def _marginal_entropy(rho: DensityMatrix, factors: Sequence[int]) -> float:
    if not factors:
        return 0.0
    if len(factors) == len(rho.dims):
        return _entropy_of(rho.mat)
    return _entropy_of(la.partial_trace(rho.mat, rho.dims, factors))


def _prepare(rho, dims, *groups):
    rho = as_density(rho, dims)
    if dims is not None and tuple(dims) != rho.dims:
        rho = DensityMatrix(rho.mat, dims, validate=False)
    n = len(rho.dims)
    out = [_factors(g, n) for g in groups]
    seen: set[int] = set()
    for g in out:
        if seen.intersection(g):
            raise ValidationError(f"factor groups overlap: {[list(x) for x in out]}")
        seen.update(g)
    return rho, out


def mutual_information(rho, a=0, b=1, dims=None) -> float:
    """``I(A:B) = H(A) + H(B) - H(AB)``; factors outside ``a ∪ b`` are traced out."""
    rho, (fa, fb) = _prepare(rho, dims, a, b)
    if not fa or not fb:
        raise ValidationError("mutual information needs two non-empty factor groups")
    return (_marginal_entropy(rho, fa) + _marginal_entropy(rho, fb)
            - _marginal_entropy(rho, sorted(fa + fb)))


def conditional_mutual_information(rho, a, b, c=(), dims=None) -> float:
    """``I(A:B|C) = H(AC) + H(BC) - H(ABC) - H(C)``; empty ``c`` gives ``I(A:B)``."""
    rho, (fa, fb, fc) = _prepare(rho, dims, a, b, c)
    if not fa or not fb:
        raise ValidationError("conditional mutual information needs non-empty A and B")
    return (_marginal_entropy(rho, sorted(fa + fc)) + _marginal_entropy(rho, sorted(fb + fc))
            - _marginal_entropy(rho, sorted(fa + fb + fc)) - _marginal_entropy(rho, fc))


def chain_rule_residual(rho, a, bs: Sequence, dims=None) -> float:
    """``|I(A:B_1...B_n) - Σ_i I(A:B_i | B_1...B_{i-1})|``."""
    rho = as_density(rho, dims)
    groups = [_factors(g, len(rho.dims)) for g in bs]
    if not groups:
        raise ValidationError("chain rule needs at least one B factor")
    if len(groups) == 1:
        return 0.0
    everything = sorted(f for g in groups for f in g)
    lhs = mutual_information(rho, a, everything)
    rhs, before = 0.0, []
    for g in groups:
        rhs += conditional_mutual_information(rho, a, g, before)
        before = sorted(before + g)
    return abs(lhs - rhs)


def _product_marginal(rho: DensityMatrix, fa: list[int], fb: list[int]) -> np.ndarray:
    """``ρ_A ⊗ ρ_B`` laid out in the factor order of ``ρ_{AB}``."""
    ra = la.partial_trace(rho.mat, rho.dims, fa) if len(fa) < len(rho.dims) else rho.mat
    rb = la.partial_trace(rho.mat, rho.dims, fb) if len(fb) < len(rho.dims) else rho.mat
    prod = np.kron(ra, rb)
    order = fa + fb
    pdims = [rho.dims[i] for i in order]
    target = sorted(order)
    return la.permute_factors(prod, pdims, [order.index(i) for i in target])


def pinsker_gap(rho, a=0, b=1, dims=None) -> float:
    """``I(A:B) - ||ρ_AB - ρ_A ⊗ ρ_B||_1^2 / (2 ln 2)``, nonnegative by Pinsker's inequality."""
    rho, (fa, fb) = _prepare(rho, dims, a, b)
    mi = mutual_information(rho, fa, fb)
    keep = sorted(fa + fb)
    rab = la.partial_trace(rho.mat, rho.dims, keep) if len(keep) < len(rho.dims) else rho.mat
    sub = DensityMatrix(rab, [rho.dims[i] for i in keep], validate=False)
    fa2 = [keep.index(i) for i in fa]
    fb2 = [keep.index(i) for i in fb]
    dist = la.trace_norm(rab - _product_marginal(sub, fa2, fb2))
    return mi - dist**2 / (2.0 * LN2)


class AlickiFannesResult(NamedTuple):
    residual: float
    bound: float
    difference: float
    distance: float
    vacuous: bool


def alicki_fannes_bound(distance: float, d_A: int) -> tuple[float, bool]:
    """``2x log d_A + 2 h2(2x)`` with ``x = ||ρ - σ||_1``; the ``h2`` argument is clamped to 1."""
    arg = 2.0 * distance
    vacuous = arg > 1.0
    return 2.0 * distance * np.log2(d_A) + 2.0 * h2(min(arg, 1.0)), bool(vacuous)


def alicki_fannes_residual(rho, sigma, a=0, b=1, mode: str = "conditional", dims=None,
                           marginal_tol: float = 1e-8) -> AlickiFannesResult:
    """Bound minus ``|H(A|B)_ρ - H(A|B)_σ|`` (``mode='conditional'``) or minus ``|ΔI(A:B)|`` (``mode='mutual'``).

    The mutual-information form requires equal ``A`` marginals.
    """
    rho, (fa, fb) = _prepare(rho, dims, a, b)
    sigma = as_density(sigma, rho.dims)
    if sigma.dims != rho.dims:
        raise ValidationError(f"states have different factorizations {rho.dims} and {sigma.dims}")
    if not fa or not fb:
        raise ValidationError("Alicki-Fannes needs non-empty A and B")
    keep = sorted(fa + fb)
    if len(keep) < len(rho.dims):
        rho = DensityMatrix(la.partial_trace(rho.mat, rho.dims, keep), [rho.dims[i] for i in keep], validate=False)
        sigma = DensityMatrix(la.partial_trace(sigma.mat, sigma.dims, keep), rho.dims, validate=False)
        fa, fb = [keep.index(i) for i in fa], [keep.index(i) for i in fb]
    d_A = int(np.prod([rho.dims[i] for i in fa]))
    if mode == "conditional":
        diff = abs((_entropy_of(rho.mat) - _marginal_entropy(rho, fb))
                   - (_entropy_of(sigma.mat) - _marginal_entropy(sigma, fb)))
    elif mode == "mutual":
        ra = la.partial_trace(rho.mat, rho.dims, fa)
        sa = la.partial_trace(sigma.mat, sigma.dims, fa)
        dev = float(np.max(np.abs(ra - sa)))
        if dev > marginal_tol:
            raise ValidationError(f"A marginals differ by {dev:.3e} (tolerance {marginal_tol:g}); mutual mode needs them equal")
        diff = abs(mutual_information(rho, fa, fb) - mutual_information(sigma, fa, fb))
    else:
        raise ValidationError(f"unknown mode {mode!r}; expected 'conditional' or 'mutual'")
    x = la.trace_norm(rho.mat - sigma.mat)
    bound, vacuous = alicki_fannes_bound(x, d_A)
    return AlickiFannesResult(bound - diff, bound, diff, x, vacuous)


def gentle_measurement_residual(rho, n_op, delta: float | None = None) -> float:
    """``2 sqrt(δ) - ||ρ - sqrt(N) ρ sqrt(N)||_1`` for ``0 ⪯ N ⪯ I``.

    ``δ`` defaults to ``1 - tr(N ρ)``, the smallest value the hypothesis allows.
    """
    rho = as_density(rho)
    n_op = la.check_hermitian(n_op, 1e-9)
    w = la.eigvalsh(n_op)
    if w[0] < -1e-10 or w[-1] > 1 + 1e-10:
        raise ValidationError(f"N must satisfy 0 <= N <= I, spectrum in [{w[0]:.3e}, {w[-1]:.3e}]")
    p = float(np.real(np.trace(n_op @ rho.mat)))
    if delta is None:
        delta = max(1.0 - p, 0.0)
    elif p < 1.0 - delta - 1e-12:
        raise ValidationError(f"tr(N rho) = {p:.6g} is below 1 - delta = {1 - delta:.6g}")
    s = la.sqrtm_psd(n_op)
    return 2.0 * np.sqrt(delta) - la.trace_norm(rho.mat - s @ rho.mat @ s)


# -- discrimination -------------------------------------------------------------

def _helstrom(ens: LabeledEnsemble) -> tuple[float, Povm]:
    gamma = ens.probs[0] * ens.states[0].mat - ens.probs[1] * ens.states[1].mat
    w, v = np.linalg.eigh(la.hermitian_part(gamma))
    pos = v[:, w > 0]
    proj = pos @ pos.conj().T
    d = ens.dim
    value = 0.5 * (1.0 + float(np.sum(np.abs(w))))
    return value, Povm([proj, np.eye(d) - proj], validate=False)


def clean_povm(elements: Sequence[np.ndarray]) -> Povm:
    """Clip negative eigenvalues and renormalize so the elements sum to ``I`` exactly."""
    cleaned = []
    for e in elements:
        w, v = np.linalg.eigh(la.hermitian_part(e))
        cleaned.append((v * np.clip(w, 0.0, None)) @ v.conj().T)
    s = sum(cleaned)
    s_inv = la.inv_sqrtm_psd(s)
    return Povm([la.hermitian_part(s_inv @ e @ s_inv) for e in cleaned], validate=False)


def _guess_sdp(weighted: Sequence[np.ndarray], tol: float) -> tuple[float, Povm]:
    """``max Σ_i tr(N_i Q_i)`` over POVMs ``{N_i}``."""
    d = weighted[0].shape[0]
    m = len(weighted)
    basis = la.hermitian_basis(d)
    a_blocks = [basis.copy() for _ in range(m)]
    b = np.array([np.real(np.trace(h)) for h in basis])
    prob = SdpProblem((d,) * m, [-la.hermitian_part(q) for q in weighted], a_blocks, b)
    sol = solve_sdp(prob, tol=tol)
    povm = clean_povm(sol.x)
    value = sum(float(np.real(np.trace(n @ q))) for n, q in zip(povm, weighted))
    return value, povm


def guessing_probability(ens: LabeledEnsemble, method: str = "auto", tol: float = 1e-10) -> tuple[float, Povm]:
    """Optimal success probability of identifying the label, with an optimal POVM.

    ``method='auto'`` uses the Helstrom formula for two states and an SDP
    otherwise; ``'sdp'`` and ``'helstrom'`` force one route.
    """
    if len(ens) == 0:
        raise ValidationError("ensemble is empty")
    if method not in ("auto", "sdp", "helstrom"):
        raise ValidationError(f"unknown method {method!r}")
    if len(ens) == 1:
        return 1.0, Povm.trivial(ens.dim)
    if method == "helstrom" or (method == "auto" and len(ens) == 2):
        if len(ens) != 2:
            raise ValidationError("the Helstrom formula needs exactly two states")
        return _helstrom(ens)
    return _guess_sdp([p * s.mat for p, s in zip(ens.probs, ens.states)], tol)


# -- accessible information ------------------------------------------------------

class AccessibleInfo(NamedTuple):
    value: float
    povm: Povm
    candidates: int


def qc_mutual_information(rho: np.ndarray, d_A: int, d_B: int, elements: Sequence[np.ndarray]) -> float:
    """``I(A:K)`` after measuring ``B`` with ``elements`` (bits)."""
    t = rho.reshape(d_A, d_B, d_A, d_B)
    h_a = _entropy_of(np.einsum("ibjb->ij", t))
    total = 0.0
    for e in elements:
        sig = np.einsum("ibjc,cb->ij", t, e)
        p = float(np.real(np.trace(sig)))
        if p <= EIG_FLOOR:
            continue
        total += p * _entropy_of(sig / p)
    return h_a - total


def _qc_gradient(rho: np.ndarray, d_A: int, d_B: int, w: np.ndarray):
    """Objective (bits) and Euclidean ascent direction with respect to the isometry ``w``."""
    t = rho.reshape(d_A, d_B, d_A, d_B)
    rho_a = np.einsum("ibjb->ij", t)
    value = _entropy_of(rho_a)
    grad = np.zeros_like(w)
    for k in range(w.shape[0]):
        row = w[k]
        e = np.outer(row.conj(), row)
        sig = np.einsum("ibjc,cb->ij", t, e)
        p = float(np.real(np.trace(sig)))
        if p <= EIG_FLOOR:
            continue
        ev, vec = np.linalg.eigh(la.hermitian_part(sig / p))
        value -= p * float(-np.sum(np.where(ev > EIG_FLOOR, ev * np.log2(np.clip(ev, EIG_FLOOR, None)), 0.0)))
        log_r = (vec * np.log(np.clip(ev, EIG_FLOOR, None))) @ vec.conj().T
        g = la.hermitian_part(np.einsum("ij,jbic->bc", log_r, t)) / LN2
        grad[k] = row @ g
    return value, grad


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


def _ascend(rho: np.ndarray, d_A: int, d_B: int, w: np.ndarray, max_iter: int, gain_tol: float):
    value, grad = _qc_gradient(rho, d_A, d_B, w)
    step = 1.0
    for _ in range(max_iter):
        herm = la.hermitian_part(w.conj().T @ grad)
        xi = grad - w @ herm
        norm2 = float(np.real(np.vdot(xi, xi)))
        if norm2 < 1e-24:
            break
        step = min(step * 2.0, 1e3)
        while step > 1e-12:
            cand = _polar(w + step * xi)
            cval, cgrad = _qc_gradient(rho, d_A, d_B, cand)
            if cval >= value + 1e-4 * step * norm2:
                break
            step *= 0.5
        else:
            break
        gain = cval - value
        w, value, grad = cand, cval, cgrad
        if gain < gain_tol:
            break
    return value, w


def _isometry_from_basis(u: np.ndarray, m: int) -> np.ndarray:
    d = u.shape[0]
    w = np.zeros((m, d), dtype=complex)
    w[:d] = u.conj().T
    return w


def accessible_information(rho, outcomes: int | None = None, restarts: int = 10, rng=None,
                           a=0, b=1, dims=None, max_iter: int = 500, gain_tol: float = 1e-9) -> AccessibleInfo:
    """Best ``I(A:K)`` found over POVMs on ``B`` with at most ``outcomes`` elements.

    Rank-one POVMs are parameterized as ``N_k = W^† |k><k| W`` with ``W`` an
    isometry and optimized by Riemannian gradient ascent. Starting points
    are the computational basis, the eigenbasis of ``ρ_B`` and ``restarts``
    Haar isometries, the ``i``-th drawn from child stream ``i`` of ``rng``.
    The result is a lower bound on the accessible information.
    """
    rho, (fa, fb) = _prepare(rho, dims, a, b)
    if not fa or not fb:
        raise ValidationError("accessible information needs non-empty A and B")
    keep = fa + fb
    d_A = int(np.prod([rho.dims[i] for i in fa]))
    d_B = int(np.prod([rho.dims[i] for i in fb]))
    if keep != list(range(len(rho.dims))):
        red = la.partial_trace(rho.mat, rho.dims, sorted(keep))
        sdims = [rho.dims[i] for i in sorted(keep)]
        mat = la.permute_factors(red, sdims, [sorted(keep).index(i) for i in keep])
    else:
        mat = rho.mat
    m = d_B * d_B if outcomes is None else int(outcomes)
    if m < 1:
        raise ValidationError("outcomes must be at least 1")
    if m == 1:
        return AccessibleInfo(0.0, Povm.trivial(d_B), 1)
    rng = as_rng(rng)
    starts = []
    if m >= d_B:
        rho_b = np.einsum("ibic->bc", mat.reshape(d_A, d_B, d_A, d_B))
        starts.append(_isometry_from_basis(np.eye(d_B, dtype=complex), m))
        starts.append(_isometry_from_basis(np.linalg.eigh(la.hermitian_part(rho_b))[1], m))
    for i in range(restarts):
        if m >= d_B:
            starts.append(haar_isometry(d_B, m, rng.child(i)))
    best_val, best_w = -np.inf, None
    for w0 in starts:
        val, w = _ascend(mat, d_A, d_B, w0, max_iter, gain_tol)
        if val > best_val + 1e-12:
            best_val, best_w = val, w
    if best_w is None:
        # fewer outcomes than d_B: coarse-grain a projective measurement
        best_val, best_povm = -np.inf, None
        for i in range(max(restarts, 1)):
            u = np.eye(d_B) if i == 0 else la.as_matrix(haar_isometry(d_B, d_B, rng.child(i)))
            groups = np.array_split(np.arange(d_B), m)
            els = [sum(np.outer(u[:, j], u[:, j].conj()) for j in g) for g in groups]
            val = qc_mutual_information(mat, d_A, d_B, els)
            if val > best_val:
                best_val, best_povm = val, Povm(els, validate=False)
        return AccessibleInfo(max(best_val, 0.0), best_povm, max(restarts, 1))
    povm = Povm([np.outer(best_w[k].conj(), best_w[k]) for k in range(m)], validate=False)
    value = qc_mutual_information(mat, d_A, d_B, povm.elements)
    return AccessibleInfo(max(value, 0.0), povm, len(starts))


class DiscordResult(NamedTuple):
    value: float
    mutual_information: float
    accessible: float
    povm: Povm
    direction: str


def discord(rho, outcomes: int | None = None, restarts: int = 10, rng=None, a=0, b=1, dims=None) -> DiscordResult:
    """``D(A|B) = I(A:B) - max_POVM I(A:K)``, measuring ``B``.

    The maximization is heuristic, so the value is an upper bound on the
    discord (``direction='upper'``).
    """
    rho, (fa, fb) = _prepare(rho, dims, a, b)
    mi = mutual_information(rho, fa, fb)
    acc = accessible_information(rho, outcomes, restarts, rng, fa, fb)
    return DiscordResult(mi - acc.value, mi, acc.value, acc.povm, "upper")
