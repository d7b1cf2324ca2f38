"""Model persistence: a versioned JSON container for fitted factorizations.

The file is self-describing and complete: factors, scale, and per-column
marginal summaries (mean/stddev pairs for pca, full empirical tables for
coca/xpca) travel together, so a loaded model imputes without the original
data. Floats survive the JSON round trip exactly, which makes save, load,
impute reproduce the in-memory model's output bit for bit.
"""

import json

import numpy as np

from .gaussian import FactorModel
from .marginals import Edf

FORMAT_TAG = "gcfactor-model"
FORMAT_VERSION = 1


def _plain(value):
    """Recursively coerce numpy scalars/arrays so json can encode them."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _marginals_payload(model):
    if model.method == "pca":
        return {
            "kind": "stats",
            "stats": [[float(mu), float(sd)] for mu, sd in model.marginals],
        }
    return {
        "kind": "edf",
        "tables": [
            {
                "distinct": [float(s) for s in edf.distinct],
                "counts": [int(c) for c in edf.counts],
            }
            for edf in model.marginals
        ],
    }


def save_model(model, path):
    """Write a FactorModel to path; returns the path."""
    payload = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "method": model.method,
        "m": int(model.U.shape[0]),
        "n": int(model.V.shape[0]),
        "rank": int(model.U.shape[1]),
        "sigma": float(model.sigma),
        "epsilon": None if model.epsilon is None else float(model.epsilon),
        "column_names": list(model.column_names),
        "U": _plain(model.U),
        "V": _plain(model.V),
        "marginals": _marginals_payload(model),
        "info": _plain(model.info),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    return path


def _require(payload, key):
    if key not in payload:
        raise ValueError("model file is missing field %r" % key)
    return payload[key]


def load_model(path):
    """Read a model file written by save_model."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError("not a model file: %s (%s)" % (path, exc))
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_TAG:
        raise ValueError("not a model file: %s" % path)
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise ValueError("unsupported model file version %r" % version)

    method = _require(payload, "method")
    m, n, rank = (int(_require(payload, k)) for k in ("m", "n", "rank"))
    U = np.array(_require(payload, "U"), dtype=float)
    V = np.array(_require(payload, "V"), dtype=float)
    if U.shape != (m, rank) or V.shape != (n, rank):
        raise ValueError("factor shapes disagree with the declared dimensions")

    marg = _require(payload, "marginals")
    kind = marg.get("kind")
    if kind == "stats":
        marginals = [(float(mu), float(sd)) for mu, sd in marg["stats"]]
    elif kind == "edf":
        marginals = [Edf(t["distinct"], t["counts"]) for t in marg["tables"]]
    else:
        raise ValueError("unknown marginal payload kind %r" % kind)
    if len(marginals) != n:
        raise ValueError("marginal count disagrees with the declared width")

    return FactorModel(
        method,
        U,
        V,
        float(_require(payload, "sigma")),
        marginals,
        epsilon=payload.get("epsilon"),
        column_names=_require(payload, "column_names"),
        info=payload.get("info"),
    )
