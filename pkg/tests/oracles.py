"""Reference computations that share no code with the package under test.

Everything here is built from plain numpy/scipy/cvxpy primitives so that a
bug in the package cannot leak into its own oracle.
"""
from __future__ import annotations

import itertools

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize


def rand_unitary(d, gen):
    z = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rand_kraus(d_in, d_out, rank, gen):
    """Kraus operators of a random channel, from the top of a random unitary."""
    u = rand_unitary(d_out * rank, gen)
    v = u[:, :d_in]
    return [v[r * d_out:(r + 1) * d_out] for r in range(rank)]


def apply_kraus(ks, rho):
    return sum(k @ rho @ k.conj().T for k in ks)


def choi_unnormalized(ks, d_in):
    """Σ_ij |i><j| ⊗ Λ(|i><j|)."""
    d_out = ks[0].shape[0]
    out = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in))
            e[i, j] = 1.0
            out[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = apply_kraus(ks, e)
    return out


def tnorm(m):
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def ptrace_last(m, d1, d2):
    return np.trace(m.reshape(d1, d2, d1, d2), axis1=1, axis2=3)


def ptrace_first(m, d1, d2):
    return np.trace(m.reshape(d1, d2, d1, d2), axis1=0, axis2=2)


def diamond_brute_force(ks0, ks1, d_in, restarts=20, seed=0):
    """Lower bound on ``||Λ0 - Λ1||_◇`` by optimizing over pure inputs on ``C^d ⊗ C^d``."""
    gen = np.random.default_rng(seed)

    def value(x):
        psi = (x[: d_in * d_in] + 1j * x[d_in * d_in:]).reshape(d_in, d_in)
        psi = psi / np.linalg.norm(psi)
        # |psi> = Σ psi_{rs} |r>_ref |s>_sys ; apply channel on the system
        out = 0
        for k0 in ks0:
            v = psi @ k0.T
            out = out + v.reshape(-1, 1) @ v.reshape(1, -1).conj()
        for k1 in ks1:
            v = psi @ k1.T
            out = out - v.reshape(-1, 1) @ v.reshape(1, -1).conj()
        return -tnorm(out)

    best = 0.0
    for _ in range(restarts):
        res = minimize(value, gen.standard_normal(2 * d_in * d_in), method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12})
        best = max(best, -res.fun)
    return best


def diamond_cvxpy(ks0, ks1, d_in):
    """Primal SDP for the diamond norm, solved with cvxpy."""
    d_out = ks0[0].shape[0]
    j = choi_unnormalized(ks0, d_in) - choi_unnormalized(ks1, d_in)
    n = d_in * d_out
    w = cp.Variable((n, n), hermitian=True)
    rho = cp.Variable((d_in, d_in), hermitian=True)
    cons = [w >> 0, rho >> 0, cp.real(cp.trace(rho)) == 1, cp.kron(rho, np.eye(d_out)) - w >> 0]
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(j @ w))), cons)
    prob.solve(solver=cp.CLARABEL)
    return 2.0 * float(prob.value)


def von_neumann(m):
    w = np.linalg.eigvalsh(m)
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log2(w)))


def qubit_projector(theta, phi):
    v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    p = np.outer(v, v.conj())
    return [p, np.eye(2) - p]


def classical_mi(rho_ab, elements, d_a=2):
    """I(A:X) after measuring the second qubit with ``elements``."""
    rho_a = ptrace_last(rho_ab, d_a, 2)
    total = von_neumann(rho_a)
    for e in elements:
        cond = ptrace_last(rho_ab @ np.kron(np.eye(d_a), e), d_a, 2)
        p = float(np.real(np.trace(cond)))
        if p > 1e-14:
            total -= p * von_neumann(cond / p)
    return total


def accessible_info_qubit_grid(rho_ab, n=120):
    """Maximum over projective qubit measurements on a Bloch-sphere grid, then polished."""
    best, arg = -1.0, (0.0, 0.0)
    for th in np.linspace(0, np.pi, n):
        for ph in np.linspace(0, 2 * np.pi, 2 * n, endpoint=False):
            v = classical_mi(rho_ab, qubit_projector(th, ph))
            if v > best:
                best, arg = v, (th, ph)
    res = minimize(lambda x: -classical_mi(rho_ab, qubit_projector(*x)), np.array(arg), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14})
    return max(best, -res.fun)


def helstrom(p0, rho0, p1, rho1):
    return 0.5 * (1 + tnorm(p0 * rho0 - p1 * rho1))


def guessing_cvxpy(probs, states):
    d = states[0].shape[0]
    ms = [cp.Variable((d, d), hermitian=True) for _ in states]
    cons = [m >> 0 for m in ms] + [sum(ms) == np.eye(d)]
    obj = cp.Maximize(cp.real(sum(p * cp.trace(m @ s) for p, m, s in zip(probs, ms, states))))
    prob = cp.Problem(obj, cons)
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def random_density(d, gen, rank=None):
    rank = d if rank is None else rank
    g = gen.standard_normal((d, rank)) + 1j * gen.standard_normal((d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def partial_trace_loops(m, dims, keep):
    """Partial trace by explicit index loops."""
    n = len(dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)
    t = m.reshape(tuple(dims) * 2)
    for ki in itertools.product(*[range(d) for d in kd]):
        for kj in itertools.product(*[range(d) for d in kd]):
            s = 0
            for di in itertools.product(*[range(dims[i]) for i in drop]):
                row, col = [0] * n, [0] * n
                for pos, i in enumerate(keep):
                    row[i], col[i] = ki[pos], kj[pos]
                for pos, i in enumerate(drop):
                    row[i] = col[i] = di[pos]
                s += t[tuple(row) + tuple(col)]
            out[np.ravel_multi_index(ki, kd), np.ravel_multi_index(kj, kd)] = s
    return out
