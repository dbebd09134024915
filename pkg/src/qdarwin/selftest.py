"""Quick invariant suites, one per module, runnable from the command line.

Each suite returns ``(check, ok)`` pairs. A suite named by the hidden
fault hook runs with a negated tolerance, so its checks fail; this is a
negative control for the harness itself.
"""
from __future__ import annotations

import io
import json
import sys
from contextlib import redirect_stderr, redirect_stdout
from typing import Callable

import numpy as np

from . import channels as chm
from . import linalg as la
from .states import DensityMatrix, LabeledEnsemble, Povm, SeededRng, haar_unitary, random_density

SUITE_ORDER = ("linalg", "quantum-core", "channels", "infotheory", "diamond", "darwinism", "cli")


def _linalg(tol: float):
    rng = SeededRng(11)
    h = rng.complex_normal((6, 6))
    h = h + h.conj().T
    w, v = la.eig_hermitian(h)
    recon = float(np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)))
    a, b = rng.complex_normal((2, 2)), rng.complex_normal((3, 3))
    pt = float(np.max(np.abs(la.partial_trace(np.kron(a, b), (2, 3), [0]) - a * np.trace(b))))
    s = np.array([[1, 1j], [0, 2]])
    tn = abs(la.trace_norm(s) - float(np.sum(np.linalg.svd(s, compute_uv=False))))
    return [("eigendecomposition reconstructs", recon <= tol), ("partial trace of product", pt <= tol),
            ("trace norm equals singular value sum", tn <= tol)]


def _quantum_core(tol: float):
    rng = SeededRng(12)
    rho = random_density((2, 3), rng=rng.child(0))
    u = haar_unitary(4, rng.child(1))
    povm = Povm.from_basis(haar_unitary(3, rng.child(2)))
    sums = float(np.max(np.abs(sum(povm) - np.eye(3))))
    return [("random state has unit trace", abs(np.trace(rho.mat).real - 1) <= tol),
            ("haar sample is unitary", float(np.max(np.abs(u.conj().T @ u - np.eye(4)))) <= tol),
            ("basis POVM sums to identity", sums <= tol),
            ("child streams are reproducible",
             float(np.max(np.abs(SeededRng(5).child(3).normal(4) - SeededRng(5).child(3).normal(4)))) <= tol)]


def _channels(tol: float):
    ch = chm.model_haar_env(2, (2, 2), SeededRng(13))
    marg = la.partial_trace(ch.choi, ch.choi_dims, [0])
    rho = random_density(2, rng=SeededRng(14))
    via_k = chm.apply(ch, rho, via="kraus").mat
    via_c = chm.apply(ch, rho, via="choi").mat
    back = chm.loads_channel(chm.dumps_channel(ch))
    return [("Choi input marginal is maximally mixed", float(np.max(np.abs(marg - np.eye(2) / 2))) <= tol),
            ("Kraus and Choi actions agree", float(np.max(np.abs(via_k - via_c))) <= tol),
            ("serialization round-trips", float(np.max(np.abs(back.choi - ch.choi))) <= tol)]


def _infotheory(tol: float):
    from .infotheory import discord, guessing_probability, mutual_information, pinsker_gap
    bell = DensityMatrix.pure(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    plus = DensityMatrix.pure(np.array([1, 1]) / np.sqrt(2))
    ens = LabeledEnsemble([0.5, 0.5], [DensityMatrix.basis(2, 0), plus])
    pg, _ = guessing_probability(ens, method="sdp")
    disc = discord(bell, restarts=2, rng=SeededRng(15)).value
    rho = random_density((3, 3), rng=SeededRng(16))
    return [("Bell mutual information is 2 bits", abs(mutual_information(bell) - 2.0) <= 1e3 * tol),
            ("guessing SDP matches Helstrom", abs(pg - 0.5 * (1 + np.sqrt(0.5))) <= 1e3 * tol),
            ("Bell discord is 1 bit", abs(disc - 1.0) <= 1e4 * tol),
            ("Pinsker gap is nonnegative", pinsker_gap(rho, 0, 1) >= -tol)]


def _diamond(tol: float):
    from .diamond import diamond_distance, lemma5_block_bound
    ident = chm.QuantumChannel.identity(2)
    repl = chm.QuantumChannel.replacer(np.eye(2) / 2, 2)
    val = diamond_distance(ident, repl).value
    rng = SeededRng(17)
    h = rng.complex_normal((6, 6))
    lem = lemma5_block_bound(h + h.conj().T, 2, 3)
    return [("identity vs replacer is 1.5", abs(val - 1.5) <= 1e3 * tol), ("block bound holds", lem.holds and tol > 0)]


def _darwinism(tol: float):
    from .darwinism import theorem1_bound, theorem2_bound, verify_theorem1
    rep = verify_theorem1(chm.model_broadcast_classical(2, 3), 0.25, 1, SeededRng(18), restarts=2)
    povm_err = max(float(np.max(np.abs(m - c))) for m, c in zip(rep.pointer_povm, Povm.computational(2)))
    scale = theorem2_bound(2, 1e9, 8, 0.1) / theorem1_bound(2, 1e9, 0.1)
    return [("theorem bound scales by cube root of t", abs(scale - 2.0) <= tol),
            ("broadcast fragments are exact", all(r.diamond_dist <= 1e4 * tol for r in rep.per_fragment)),
            ("pointer POVM is computational", povm_err <= 1e4 * tol),
            ("chain inequalities hold", rep.chain_holds and tol > 0)]


def _cli(tol: float):
    from .cli import main
    outs, codes = [], []
    for argv in (["models"], ["models"], ["verify-t1", "--format", "xml"]):
        buf = io.StringIO()
        with redirect_stdout(buf), redirect_stderr(io.StringIO()):
            codes.append(main(argv))
        outs.append(buf.getvalue())
    return [("models listing is valid JSON", bool(json.loads(outs[0])["models"]) and tol > 0),
            ("repeated runs are byte-identical", outs[0] == outs[1] and tol > 0),
            ("invalid input exits 2", codes[2] == 2 and tol > 0)]


SUITES: dict[str, Callable[[float], list]] = {
    "linalg": _linalg, "quantum-core": _quantum_core, "channels": _channels, "infotheory": _infotheory,
    "diamond": _diamond, "darwinism": _darwinism, "cli": _cli,
}


def run_suite(name: str, fault: str | None = None) -> list[tuple[str, bool]]:
    tol = 1e-9 * (-1.0 if fault == name else 1.0)
    try:
        return [(c, bool(ok)) for c, ok in SUITES[name](tol)]
    except Exception as exc:  # a crashing suite is a failing suite
        return [(f"suite raised {type(exc).__name__}: {exc}", False)]


def run_selftest(suite: str | None = None, fault: str | None = None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    if suite is not None and suite not in SUITES:
        print(f"qdarwin: invalid input: unknown suite {suite!r}; choose from {', '.join(SUITE_ORDER)}", file=sys.stderr)
        return 2
    names = [suite] if suite else list(SUITE_ORDER)
    failed = []
    for name in names:
        results = run_suite(name, fault)
        ok = all(r for _, r in results)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}", file=stream)
        for check, r in results:
            if not r:
                print(f"    failed: {check}", file=stream)
        if not ok:
            failed.append(name)
    print(f"{len(names) - len(failed)}/{len(names)} suites passed" + (f"; failed: {', '.join(failed)}" if failed else ""),
          file=stream)
    return 3 if failed else 0
