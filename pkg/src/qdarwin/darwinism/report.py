"""JSON and CSV serialization of experiment reports.

Floats are written with Python's shortest round-trip representation, so
a parsed report reproduces every double bit for bit. Non-finite values
become ``null``.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math

import numpy as np

from ..states import DensityMatrix, Povm
from .agreement import AgreementReport
from .broadcast import Corollary4Report
from .verify import DarwinismReport

CSV_FIELDS = ("index", "diamond_dist", "choi_dist", "cmi_j", "chain_bound_j",
              "average_dist", "theorem_bound", "delta", "good_set", "markov_holds")


def jsonable(obj):
    """Convert numbers, arrays, states and POVMs into plain JSON types."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": jsonable(obj.real.tolist()), "im": jsonable(obj.imag.tolist())}
        return jsonable(obj.tolist())
    if isinstance(obj, DensityMatrix):
        return {"dims": list(obj.dims), "matrix": jsonable(obj.mat)}
    if isinstance(obj, Povm):
        return [jsonable(np.asarray(e)) for e in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def darwinism_to_dict(rep: DarwinismReport) -> dict:
    ext = rep.extraction
    frags = []
    for r in rep.per_fragment:
        frags.append({
            "index": r.index,
            "diamond_dist": r.diamond_dist,
            "choi_dist": r.choi_dist,
            "cmi_j": r.cmi_j,
            "chain_bound_j": r.chain_bound_j,
            "probed": r.probed,
            "diamond_upper": r.diamond_upper,
            "block_max": r.block_max,
            "measured_local_norm": r.measured_local_norm,
            "checks": dict(r.checks),
            "error": r.error,
        })
    doc = {
        "per_fragment": frags,
        "average_dist": rep.average_dist,
        "theorem_bound": rep.theorem_bound,
        "delta": rep.delta,
        "good_set": rep.good_set,
        "markov_holds": rep.markov_holds,
        "n": rep.n,
        "t": rep.t,
        "k": rep.k,
        "d_A": rep.d_A,
        "seed": rep.seed,
        "theorem_bound_vacuous": rep.vacuous,
        "average_bound": rep.average_bound,
        "average_bound_holds": rep.average_bound_holds,
        "measured_average_bound": rep.measured_average_bound,
        "measured_average_holds": rep.measured_average_holds,
        "chain_holds": rep.chain_holds,
        "failed": rep.failed,
        "extraction": {
            "probed_set": list(ext.probed_set),
            "probe_units": [list(u) for u in ext.probe_units],
            "probe_povms": ext.probe_povms,
            "avg_cmi": ext.avg_cmi,
            "scan": [{"probes": q, "avg_cmi": v} for q, v in ext.scan],
            "outcome_probs": ext.probs,
            "residual_weight": ext.residual_weight,
            "pointer_povm": ext.pointer_povm,
        },
    }
    return jsonable(doc)


def to_dict(rep) -> dict:
    if isinstance(rep, DarwinismReport):
        return darwinism_to_dict(rep)
    if isinstance(rep, (AgreementReport, Corollary4Report)):
        return jsonable({f.name: getattr(rep, f.name) for f in dataclasses.fields(rep)})
    if isinstance(rep, dict):
        return jsonable(rep)
    raise TypeError(f"no serializer for {type(rep).__name__}")


def to_json(rep) -> str:
    return json.dumps(to_dict(rep), indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    if isinstance(v, (list, tuple)):
        return "-".join(str(x) for x in v)
    return str(v)


def to_csv(rep: DarwinismReport) -> str:
    """One row per fragment (or subset) with the fixed header :data:`CSV_FIELDS`."""
    if not isinstance(rep, DarwinismReport):
        raise TypeError("CSV output is defined for Darwinism reports only")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    good = {tuple(g) if isinstance(g, (list, tuple)) else g for g in rep.good_set}
    for r in rep.per_fragment:
        key = tuple(r.index) if isinstance(r.index, (list, tuple)) else r.index
        w.writerow([_cell(x) for x in (
            r.index, r.diamond_dist, r.choi_dist, r.cmi_j, r.chain_bound_j,
            rep.average_dist, rep.theorem_bound, rep.delta, key in good, rep.markov_holds)])
    return buf.getvalue()
