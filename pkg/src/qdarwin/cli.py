"""Command-line experiment runner.

Exit status: 0 on success, 2 for invalid input (the message names the
offending field), 3 for numerical failure (a partial report is still
written and flagged ``"failed": true``).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import channels as chm
from .errors import ExtractionError, SdpConvergenceError, ValidationError
from .states import DensityMatrix, SeededRng, random_density

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

MODELS = ("broadcast", "cnot_cascade", "partial_swap", "haar", "custom_choi_file")
STATES = ("bell", "classical", "product", "random")

DEFAULT_TOLERANCES = {
    "diamond_tol": 1e-8,
    "sdp_max_iter": 100,
    "choi_cap": 64,
    "probe_restarts": 20,
    "grid_size": 200,
    "access_restarts": 10,
    "max_evals": 2000,
}

CONFIG_KEYS = {
    "model", "d_A", "fragment_dims", "delta", "k", "t", "seed", "optimizer_budget", "tolerances", "output",
    "angle", "choi_file", "observers", "state", "n_values", "probe_strategy",
}


@dataclass
class ExperimentConfig:
    model: str = "broadcast"
    d_A: int = 2
    fragment_dims: tuple[int, ...] = (2, 2, 2, 2)
    delta: float = 0.25
    k: int = 1
    t: int | None = None
    seed: int = 0
    optimizer_budget: int = 10
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: dict = field(default_factory=dict)
    angle: float = math.pi / 2
    choi_file: str | None = None
    observers: list[int] | None = None
    state: Any = "bell"
    n_values: list[int] = field(default_factory=lambda: [1, 2, 3])
    probe_strategy: str = "greedy"


def _int(doc, key, lo=None, hi=None) -> int:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"config field '{key}' must be an integer, got {v!r}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ValidationError(f"config field '{key}' = {v} is out of range [{lo}, {hi}]")
    return v


def _num(doc, key) -> float:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"config field '{key}' must be a finite number, got {v!r}")
    return float(v)


def parse_config(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    unknown = sorted(set(doc) - CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"config field '{unknown[0]}' is not recognized")
    cfg = ExperimentConfig()
    if "model" in doc:
        if doc["model"] not in MODELS:
            raise ValidationError(f"config field 'model' must be one of {list(MODELS)}, got {doc['model']!r}")
        cfg.model = doc["model"]
    if "d_A" in doc:
        cfg.d_A = _int(doc, "d_A", 2)
    if "fragment_dims" in doc:
        fd = doc["fragment_dims"]
        if not isinstance(fd, list) or not fd or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in fd):
            raise ValidationError("config field 'fragment_dims' must be a non-empty list of positive integers")
        cfg.fragment_dims = tuple(fd)
    if "delta" in doc:
        cfg.delta = _num(doc, "delta")
        if not 0.0 < cfg.delta <= 1.0:
            raise ValidationError(f"config field 'delta' must lie in (0, 1], got {cfg.delta}")
    if "k" in doc:
        cfg.k = _int(doc, "k", 0)
    if "t" in doc and doc["t"] is not None:
        cfg.t = _int(doc, "t", 1)
    if "seed" in doc:
        cfg.seed = _int(doc, "seed", 0, 2**64 - 1)
    if "optimizer_budget" in doc:
        cfg.optimizer_budget = _int(doc, "optimizer_budget", 0)
    if "tolerances" in doc:
        tol = doc["tolerances"]
        if not isinstance(tol, dict):
            raise ValidationError("config field 'tolerances' must be an object")
        for key, val in tol.items():
            if key not in DEFAULT_TOLERANCES:
                raise ValidationError(f"config field 'tolerances.{key}' is not recognized")
            if key == "diamond_tol":
                if isinstance(val, bool) or not isinstance(val, (int, float)) or not 0 < val < 1:
                    raise ValidationError(f"config field 'tolerances.diamond_tol' must lie in (0, 1), got {val!r}")
                cfg.tolerances[key] = float(val)
            else:
                if isinstance(val, bool) or not isinstance(val, int) or val < 1:
                    raise ValidationError(f"config field 'tolerances.{key}' must be a positive integer, got {val!r}")
                cfg.tolerances[key] = val
    if "output" in doc:
        out = doc["output"]
        if not isinstance(out, dict) or set(out) - {"path", "format"}:
            raise ValidationError("config field 'output' must be an object with 'path' and/or 'format'")
        if "format" in out and out["format"] not in ("json", "csv"):
            raise ValidationError(f"config field 'output.format' must be 'json' or 'csv', got {out['format']!r}")
        cfg.output = dict(out)
    if "angle" in doc:
        cfg.angle = _num(doc, "angle")
    if "choi_file" in doc:
        if not isinstance(doc["choi_file"], str):
            raise ValidationError("config field 'choi_file' must be a path string")
        path = doc["choi_file"]
        cfg.choi_file = path if os.path.isabs(path) else os.path.join(base_dir, path)
        if not os.path.isfile(cfg.choi_file):
            raise ValidationError(f"config field 'choi_file': file {path!r} does not exist")
    if cfg.model == "custom_choi_file" and cfg.choi_file is None:
        raise ValidationError("config field 'choi_file' is required for model 'custom_choi_file'")
    if "observers" in doc:
        obs = doc["observers"]
        if not isinstance(obs, list) or not obs or any(isinstance(x, bool) or not isinstance(x, int) for x in obs):
            raise ValidationError("config field 'observers' must be a non-empty list of fragment indices")
        cfg.observers = list(obs)
    if "state" in doc:
        st = doc["state"]
        if isinstance(st, str):
            if st not in STATES:
                raise ValidationError(f"config field 'state' must be one of {list(STATES)} or a matrix object, got {st!r}")
        elif not (isinstance(st, dict) and {"re", "im", "dims"} <= set(st)):
            raise ValidationError("config field 'state' must be a name or an object with 're', 'im' and 'dims'")
        cfg.state = st
    if "n_values" in doc:
        nv = doc["n_values"]
        if not isinstance(nv, list) or not nv or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in nv):
            raise ValidationError("config field 'n_values' must be a non-empty list of positive integers")
        cfg.n_values = list(nv)
    if "probe_strategy" in doc:
        if doc["probe_strategy"] not in ("greedy", "block"):
            raise ValidationError("config field 'probe_strategy' must be 'greedy' or 'block'")
        cfg.probe_strategy = doc["probe_strategy"]
    _check_model_shape(cfg)
    return cfg


def _check_model_shape(cfg: ExperimentConfig) -> None:
    n = len(cfg.fragment_dims)
    if cfg.model == "broadcast" and any(d != cfg.d_A for d in cfg.fragment_dims):
        raise ValidationError("config field 'fragment_dims' must all equal 'd_A' for model 'broadcast'")
    if cfg.model in ("cnot_cascade", "partial_swap"):
        if cfg.d_A != 2:
            raise ValidationError(f"config field 'd_A' must be 2 for model '{cfg.model}'")
        if any(d != 2 for d in cfg.fragment_dims):
            raise ValidationError(f"config field 'fragment_dims' must be all 2 for model '{cfg.model}'")
    if cfg.model == "partial_swap" and not 0.0 <= cfg.angle <= math.pi / 2 + 1e-12:
        raise ValidationError(f"config field 'angle' must lie in [0, pi/2], got {cfg.angle}")
    if cfg.model != "custom_choi_file":
        side = cfg.d_A * int(np.prod(cfg.fragment_dims))
        if side > cfg.tolerances["choi_cap"]:
            raise ValidationError(
                f"config field 'fragment_dims': Choi dimension {side} exceeds the desk-scale cap {cfg.tolerances['choi_cap']}")
        if cfg.model == "haar" and int(np.prod(cfg.fragment_dims)) < cfg.d_A:
            raise ValidationError("config field 'fragment_dims' is too small to hold the input for model 'haar'")
    t = cfg.t or 1
    if t > n:
        raise ValidationError(f"config field 't' = {t} exceeds the number of fragments {n}")
    if cfg.model != "custom_choi_file" and cfg.k >= n // t:
        raise ValidationError(f"config field 'k' = {cfg.k} must be below the number of probe units {n // t}")


def build_model(cfg: ExperimentConfig) -> chm.QuantumChannel:
    n = len(cfg.fragment_dims)
    if cfg.model == "broadcast":
        return chm.model_broadcast_classical(cfg.d_A, n)
    if cfg.model == "cnot_cascade":
        return chm.model_cnot_cascade(n)
    if cfg.model == "partial_swap":
        return chm.model_partial_swap(n, cfg.angle)
    if cfg.model == "haar":
        return chm.model_haar_env(cfg.d_A, cfg.fragment_dims, SeededRng(cfg.seed).child(0))
    with open(cfg.choi_file, encoding="utf-8") as fh:
        try:
            ch = chm.loads_channel(fh.read())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config field 'choi_file': not valid JSON ({exc})") from exc
    if ch.in_dim * ch.out_dim > cfg.tolerances["choi_cap"]:
        raise ValidationError(f"config field 'choi_file': Choi dimension exceeds the desk-scale cap {cfg.tolerances['choi_cap']}")
    return ch


def build_state(choice, seed: int) -> DensityMatrix:
    if isinstance(choice, dict):
        try:
            m = np.asarray(choice["re"], dtype=float) + 1j * np.asarray(choice["im"], dtype=float)
            return DensityMatrix(m, [int(d) for d in choice["dims"]])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"config field 'state': {exc}") from exc
    if choice == "bell":
        v = np.array([1, 0, 0, 1]) / np.sqrt(2)
        return DensityMatrix.pure(v, (2, 2))
    if choice == "classical":
        return DensityMatrix(np.diag([0.5, 0, 0, 0.5]), (2, 2))
    if choice == "product":
        a = DensityMatrix(np.array([[0.7, 0.2], [0.2, 0.3]]))
        return a.tensor(DensityMatrix(np.array([[0.4, 0.1j], [-0.1j, 0.6]])))
    return random_density((2, 2), rng=SeededRng(seed).child(0))


# -- subcommands -----------------------------------------------------------------

def _run_verify(cfg: ExperimentConfig, theorem: int):
    from .darwinism import verify_theorem2
    t = 1 if theorem == 1 else (cfg.t or 2)
    ch = build_model(cfg)
    tol = cfg.tolerances
    rep = verify_theorem2(ch, t, cfg.delta, cfg.k, SeededRng(cfg.seed).child(1), probe_strategy=cfg.probe_strategy,
                          restarts=tol["probe_restarts"], cap=tol["choi_cap"], diamond_tol=tol["diamond_tol"],
                          diamond_max_iter=tol["sdp_max_iter"])
    rep.seed = cfg.seed
    return rep, rep.failed


def _run_agreement(cfg: ExperimentConfig):
    from .darwinism import build_map_approximations, extract_pointer_povm, joint_conditional_states, outcome_agreement
    ch = build_model(cfg)
    tol = cfg.tolerances
    rng = SeededRng(cfg.seed).child(1)
    ext = extract_pointer_povm(ch, cfg.k, cfg.probe_strategy, rng, restarts=tol["probe_restarts"], cap=tol["choi_cap"])
    n = len(ch.out_dims)
    if cfg.observers is None:
        free = [j for j in range(n) if j not in ext.probed_set] or list(range(n))
        observers = free[: (cfg.t or 2)]
    else:
        observers = cfg.observers
    if any(not 0 <= j < n for j in observers) or len(set(observers)) != len(observers):
        raise ValidationError(f"config field 'observers' must list distinct fragments in [0, {n - 1}]")
    observers = sorted(observers)
    approx = build_map_approximations(ext)
    rep = outcome_agreement([approx[(j,)] for j in observers], joint_conditional_states(ext, observers),
                            grid_size=tol["grid_size"], rng=SeededRng(cfg.seed).child(2))
    from .darwinism.report import to_dict
    doc = to_dict(rep)
    doc = {"observers": observers, "probed_set": list(ext.probed_set), "seed": cfg.seed, **doc}
    return doc, False


def _run_discord(cfg: ExperimentConfig):
    from .infotheory import discord
    from .darwinism.report import jsonable
    rho = build_state(cfg.state, cfg.seed)
    res = discord(rho, restarts=cfg.tolerances["access_restarts"], rng=SeededRng(cfg.seed).child(3))
    return jsonable({
        "state": cfg.state if isinstance(cfg.state, str) else "custom", "seed": cfg.seed,
        "mutual_information": res.mutual_information, "accessible_information": res.accessible,
        "discord": res.value, "direction": "upper bound (accessible information is a lower bound)",
        "povm": res.povm,
    }), False


def _run_broadcast(cfg: ExperimentConfig):
    from .darwinism import corollary4_experiment
    from .darwinism.report import to_dict
    rho = build_state(cfg.state, cfg.seed)
    runs = []
    for n in cfg.n_values:
        rep = corollary4_experiment(rho, n, cfg.optimizer_budget, SeededRng(cfg.seed).child(4),
                                    max_evals=cfg.tolerances["max_evals"],
                                    access_restarts=cfg.tolerances["access_restarts"])
        runs.append(to_dict(rep))
    best = [r["best_found_avg_mi"] for r in runs]
    order = sorted(range(len(cfg.n_values)), key=lambda i: cfg.n_values[i])
    monotone = all(best[order[i + 1]] <= best[order[i]] + 1e-6 for i in range(len(order) - 1))
    return {"state": cfg.state if isinstance(cfg.state, str) else "custom", "seed": cfg.seed,
            "optimizer_budget": cfg.optimizer_budget, "runs": runs, "monotone_nonincreasing": monotone}, False


def _run_models(cfg: ExperimentConfig):
    return {"models": [
        {"name": "broadcast", "description": "measure in the computational basis and copy the outcome to every fragment",
         "fields": ["d_A", "fragment_dims"]},
        {"name": "cnot_cascade", "description": "qubit branching isometry |b> -> |b...b>", "fields": ["fragment_dims"]},
        {"name": "partial_swap", "description": "sequential partial swaps of a system qubit with blank fragments",
         "fields": ["fragment_dims", "angle"]},
        {"name": "haar", "description": "Haar-random isometry into the fragments, drawn from the seed",
         "fields": ["d_A", "fragment_dims", "seed"]},
        {"name": "custom_choi_file", "description": "channel read from a JSON Choi document",
         "fields": ["choi_file"]},
    ]}, False


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdarwin", description="Quantum Darwinism desk-scale experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("verify-t1", "certify single fragments"), ("verify-t2", "certify fragment subsets"),
                        ("agreement", "outcome agreement between observers"), ("discord", "discord of a state"),
                        ("broadcast", "broadcast experiments over n"), ("models", "list the model library")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON experiment configuration")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), help="report format")
        sp.add_argument("--budget", type=int, help="override optimizer_budget")
    st = sub.add_parser("selftest", help="run the invariant suites")
    st.add_argument("--suite", help="run only this suite")
    st.add_argument("--inject-fault", dest="inject_fault", help=argparse.SUPPRESS)
    return p


def _load(args) -> ExperimentConfig:
    doc: dict = {}
    base = "."
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise ValidationError(f"config file {args.config!r} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        base = os.path.dirname(os.path.abspath(args.config))
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ValidationError(f"--seed {args.seed} is out of range")
        doc = {**doc, "seed": args.seed}
    if args.budget is not None:
        doc = {**doc, "optimizer_budget": args.budget}
    return parse_config(doc, base)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    if args.command == "selftest":
        from .selftest import run_selftest
        return run_selftest(args.suite, fault=args.inject_fault)
    try:
        cfg = _load(args)
        fmt = args.format or cfg.output.get("format", "json")
        out_path = args.out or cfg.output.get("path")
        if fmt == "csv" and args.command not in ("verify-t1", "verify-t2"):
            raise ValidationError(f"--format csv is only available for verify-t1 and verify-t2, not {args.command}")
        runners = {"verify-t1": lambda c: _run_verify(c, 1), "verify-t2": lambda c: _run_verify(c, 2),
                   "agreement": _run_agreement, "discord": _run_discord, "broadcast": _run_broadcast,
                   "models": _run_models}
        result, failed = runners[args.command](cfg)
    except ValidationError as exc:
        print(f"qdarwin: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SdpConvergenceError, ExtractionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qdarwin: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    from .darwinism.report import DarwinismReport, to_csv, to_dict
    if fmt == "csv":
        text = to_csv(result)
    else:
        doc = to_dict(result) if isinstance(result, DarwinismReport) else result
        text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    _emit(text, out_path)
    if failed:
        print("qdarwin: numerical failure: at least one solver did not converge; report is partial", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
