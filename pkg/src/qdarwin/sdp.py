"""Small dense semidefinite programs over complex Hermitian blocks.

Standard form, with ``X = diag(X_1, ..., X_B)`` block diagonal::

    primal:  minimize  <C, X>   s.t.  <A_i, X> = b_i,  X ⪰ 0
    dual:    maximize  b · y    s.t.  S = C - Σ_i y_i A_i ⪰ 0

where ``<P, Q> = Re tr(P Q)`` on Hermitian matrices. The solver is an
infeasible primal-dual path-following method with Nesterov-Todd scaling
and a Mehrotra predictor-corrector step, working natively on Hermitian
blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import SdpConvergenceError, ValidationError

STEP_FRACTION = 0.98
MIN_MARGIN = 1e-12


@dataclass
class SdpProblem:
    """Block-structured SDP in standard form.

    ``a_blocks[b]`` holds all constraint matrices restricted to block ``b``
    as an array of shape ``(m, n_b, n_b)``.
    """

    block_dims: tuple[int, ...]
    c_blocks: list[np.ndarray]
    a_blocks: list[np.ndarray]
    b: np.ndarray

    def __post_init__(self):
        self.block_dims = tuple(int(d) for d in self.block_dims)
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = len(self.b)
        if len(self.c_blocks) != len(self.block_dims) or len(self.a_blocks) != len(self.block_dims):
            raise ValidationError("objective/constraint blocks do not match block_dims")
        cs, As = [], []
        for n, c, a in zip(self.block_dims, self.c_blocks, self.a_blocks):
            c = la.as_matrix(c)
            a = np.asarray(a, dtype=complex)
            if c.shape != (n, n) or a.shape != (m, n, n):
                raise ValidationError(f"block of size {n}: objective {c.shape}, constraints {a.shape}, expected ({m}, {n}, {n})")
            if la.hermiticity_defect(c) > 1e-12 * max(1.0, np.abs(c).max(initial=0.0)):
                raise ValidationError("objective block is not Hermitian")
            if m and np.max(np.abs(a - np.conj(np.swapaxes(a, 1, 2)))) > 1e-12 * max(1.0, np.abs(a).max()):
                raise ValidationError("constraint block is not Hermitian")
            cs.append(la.hermitian_part(c))
            As.append(0.5 * (a + np.conj(np.swapaxes(a, 1, 2))))
        self.c_blocks, self.a_blocks = cs, As

    @property
    def num_constraints(self) -> int:
        return len(self.b)

    @classmethod
    def from_constraints(cls, block_dims: Sequence[int], objective: Sequence, constraints: Sequence) -> "SdpProblem":
        """Build from per-constraint lists ``([A_i1, ..., A_iB], b_i)``; ``None`` means a zero block."""
        block_dims = tuple(int(d) for d in block_dims)
        m = len(constraints)
        a_blocks = [np.zeros((m, n, n), dtype=complex) for n in block_dims]
        b = np.zeros(m)
        for i, (mats, bi) in enumerate(constraints):
            b[i] = bi
            for k, mat in enumerate(mats):
                if mat is not None:
                    a_blocks[k][i] = mat
        c_blocks = [np.zeros((n, n), dtype=complex) if c is None else c for n, c in zip(block_dims, objective)]
        return cls(block_dims, c_blocks, a_blocks, b)

    # linear maps
    def op(self, xs) -> np.ndarray:
        out = np.zeros(self.num_constraints)
        for a, x in zip(self.a_blocks, xs):
            out += np.einsum("ipq,pq->i", np.conj(a), x).real
        return out

    def adjoint(self, y) -> list[np.ndarray]:
        return [np.tensordot(y, a, axes=1) for a in self.a_blocks]

    def objective_value(self, xs) -> float:
        return float(sum(_inner(c, x) for c, x in zip(self.c_blocks, xs)))


@dataclass
class SdpSolution:
    primal_value: float
    dual_value: float
    x: list[np.ndarray]
    y: np.ndarray
    s: list[np.ndarray]
    iterations: int
    primal_residual: float
    dual_residual: float
    history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.primal_value - self.dual_value


def _inner(p, q) -> float:
    return float(np.real(np.vdot(p, q)))


def _step_to_boundary(lam: np.ndarray, d: np.ndarray) -> float:
    """Largest α with ``diag(lam) + α d ⪰ 0`` (``inf`` if unbounded)."""
    r = 1.0 / np.sqrt(lam)
    w = np.linalg.eigvalsh(la.hermitian_part((r[:, None] * d) * r[None, :]))
    lo = float(w[0])
    return np.inf if lo >= 0 else -1.0 / lo


def _nt_scaling(x: np.ndarray, s: np.ndarray):
    lx = _chol(x)
    ls = _chol(s)
    u, sv, vh = np.linalg.svd(ls.conj().T @ lx)
    r = lx @ vh.conj().T / np.sqrt(sv)[None, :]
    rinv = (u.conj().T @ ls.conj().T) / np.sqrt(sv)[:, None]
    return r, rinv, sv


def _chol(m: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(la.hermitian_part(m))
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(la.hermitian_part(m))
        w = np.clip(w, 1e-300, None)
        q, r = np.linalg.qr((v * np.sqrt(w)).conj().T)
        return r.conj().T


def solve_sdp(problem: SdpProblem, tol: float = 1e-9, max_iter: int = 100,
              stall_tol: float | None = None) -> SdpSolution:
    """Solve ``problem``; raise :class:`SdpConvergenceError` if the gap does not close.

    Convergence requires ``|primal - dual| <= tol * max(1, |primal|)`` and
    relative primal/dual infeasibilities below ``tol``. Near the optimum the
    iterates can run out of floating-point room before reaching ``tol``; if
    that happens and the best iterate already meets ``stall_tol`` (default
    ``100 * tol``) it is returned instead of raising.
    """
    if stall_tol is None:
        stall_tol = 100.0 * tol
    p = problem
    dims = p.block_dims
    ntot = sum(dims)
    m = p.num_constraints
    bnorm = float(np.linalg.norm(p.b))
    cnorm = float(np.sqrt(sum(_inner(c, c) for c in p.c_blocks)))
    anorms = np.sqrt(sum(np.sum(np.abs(a) ** 2, axis=(1, 2)) for a in p.a_blocks)) if m else np.zeros(0)

    xi = max(10.0, np.sqrt(max(dims)), float(np.max((1.0 + np.abs(p.b)) / (1.0 + anorms))) * max(dims) if m else 10.0)
    eta = max(10.0, np.sqrt(max(dims)), cnorm, float(anorms.max()) if m else 0.0)
    xs = [xi * np.eye(n, dtype=complex) for n in dims]
    ss = [eta * np.eye(n, dtype=complex) for n in dims]
    y = np.zeros(m)

    best = None
    history = []
    for it in range(1, max_iter + 1):
        rp = p.b - p.op(xs)
        aty = p.adjoint(y)
        rd = [c - a - s for c, a, s in zip(p.c_blocks, aty, ss)]
        pobj = p.objective_value(xs)
        dobj = float(p.b @ y)
        pres = float(np.linalg.norm(rp)) / (1.0 + bnorm)
        dres = float(np.sqrt(sum(_inner(r, r) for r in rd))) / (1.0 + cnorm)
        gap = abs(pobj - dobj)
        history.append((pobj, dobj, pres, dres))
        score = max(gap / max(1.0, abs(pobj)), pres, dres)
        if best is None or score < best[0]:
            best = (score, [x.copy() for x in xs], y.copy(), [s.copy() for s in ss], pobj, dobj)
        if gap <= tol * max(1.0, abs(pobj)) and pres <= tol and dres <= tol:
            return SdpSolution(pobj, dobj, xs, y, ss, it, pres, dres, history)

        scal = [_nt_scaling(x, s) for x, s in zip(xs, ss)]
        lams = [sc[2] for sc in scal]
        lam_min = min(float(l.min()) for l in lams)
        if lam_min < MIN_MARGIN:
            if best[0] <= stall_tol:
                return _from_best(p, best, it, history)
            raise SdpConvergenceError(
                f"iterate lost its interior margin (min scaled eigenvalue {lam_min:.2e}) before the gap closed",
                iterate=best, gap=best[4] - best[5], iterations=it)
        ws = [r @ r.conj().T for r, _, _ in scal]
        mu = sum(float(np.sum(l**2)) for l in lams) / ntot

        mmat = np.zeros((m, m))
        for a, w in zip(p.a_blocks, ws):
            waw = w[None] @ a @ w[None]
            mmat += (np.conj(a).reshape(m, -1) @ waw.reshape(m, -1).T).real
        mmat = 0.5 * (mmat + mmat.T)
        try:
            cho = np.linalg.cholesky(mmat)
            solve_m = lambda v: np.linalg.solve(cho.T, np.linalg.solve(cho, v))  # noqa: E731
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(mmat, rcond=1e-14)
            solve_m = lambda v: pinv @ v  # noqa: E731
        wrdw = [w @ r @ w for w, r in zip(ws, rd)]
        a_wrdw = p.op(wrdw)

        def direction(rcs):
            gs = []
            for (r, _, lam), rc in zip(scal, rcs):
                u = rc * (2.0 / (lam[:, None] + lam[None, :]))
                gs.append(r @ u @ r.conj().T)
            dy = solve_m(rp - p.op(gs) + a_wrdw)
            atdy = p.adjoint(dy)
            dss = [r_ - a for r_, a in zip(rd, atdy)]
            dxs = [g - w @ ds @ w for g, w, ds in zip(gs, ws, dss)]
            return dxs, dy, dss

        def scaled(dxs, dss):
            xt = [rinv @ dx @ rinv.conj().T for (_, rinv, _), dx in zip(scal, dxs)]
            st = [r.conj().T @ ds @ r for (r, _, _), ds in zip(scal, dss)]
            return xt, st

        def steps(xt, st):
            ap = min(_step_to_boundary(l, d) for l, d in zip(lams, xt))
            ad = min(_step_to_boundary(l, d) for l, d in zip(lams, st))
            return ap, ad

        # predictor
        rcs = [-np.diag(l**2).astype(complex) for l in lams]
        dxs, dy, dss = direction(rcs)
        xt, st = scaled(dxs, dss)
        ap, ad = steps(xt, st)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = sum(_inner(x + ap * dx, s + ad * ds) for x, dx, s, ds in zip(xs, dxs, ss, dss)) / ntot
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 0.0, 1.0))

        # corrector
        rcs = []
        for l, a_, b_ in zip(lams, xt, st):
            rc = sigma * mu * np.eye(len(l)) - np.diag(l**2) - 0.5 * (a_ @ b_ + b_ @ a_)
            rcs.append(la.hermitian_part(rc))
        dxs, dy, dss = direction(rcs)
        xt, st = scaled(dxs, dss)
        ap, ad = steps(xt, st)
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)
        xs = [la.hermitian_part(x + ap * dx) for x, dx in zip(xs, dxs)]
        ss = [la.hermitian_part(s + ad * ds) for s, ds in zip(ss, dss)]
        y = y + ad * dy
        if max(ap, ad) < 1e-10 and best[0] <= stall_tol:
            return _from_best(p, best, it, history)

    if best[0] <= stall_tol:
        return _from_best(p, best, max_iter, history)
    raise SdpConvergenceError(
        f"no convergence in {max_iter} iterations (best gap {best[4] - best[5]:.3e})",
        iterate=best, gap=best[4] - best[5], iterations=max_iter)


def _from_best(p: SdpProblem, best, it: int, history) -> SdpSolution:
    _, xs, y, ss, pobj, dobj = best
    bnorm = float(np.linalg.norm(p.b))
    cnorm = float(np.sqrt(sum(_inner(c, c) for c in p.c_blocks)))
    pres = float(np.linalg.norm(p.b - p.op(xs))) / (1.0 + bnorm)
    rd = [c - a - s for c, a, s in zip(p.c_blocks, p.adjoint(y), ss)]
    dres = float(np.sqrt(sum(_inner(r, r) for r in rd))) / (1.0 + cnorm)
    return SdpSolution(pobj, dobj, xs, y, ss, it, pres, dres, history)
