"""File formats: instance bundles (JSON), datasets (JSON lines), configs (TOML).

Piece endpoints, weights and other construction doubles are stored as
hex-float strings so bundles round-trip bit for bit.  Every writer emits
keys in sorted order with no timestamps, so equal inputs give equal bytes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .hidden_direction import LabeledDataset
from .massart_measures import ConstructionParams, IntervalFamily, MeasurePair, PiecewiseGaussianMeasure
from .veronese_ptf import MonomialBasis, VeroneseTarget

BUNDLE_FORMAT = "massart-sq-bundle/1"
DATASET_FORMAT = "massart-sq-dataset/1"
_PACKAGE_DIR = Path(__file__).resolve().parent


def hexf(x: float) -> str:
    return float(x).hex()


def unhexf(s: str) -> float:
    return float.fromhex(s)


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def code_digest() -> str:
    """Hash of the package source, embedded in every output."""
    h = hashlib.sha256()
    for path in sorted(_PACKAGE_DIR.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def params_to_dict(params: ConstructionParams) -> dict:
    d = dataclasses.asdict(params)
    return {k: (hexf(v) if isinstance(v, float) else v) for k, v in d.items()}


def params_from_dict(d: dict) -> ConstructionParams:
    kw = {k: (unhexf(v) if isinstance(v, str) and k not in ("variant",) else v) for k, v in d.items()}
    return ConstructionParams(**kw)


def measure_to_dict(meas: PiecewiseGaussianMeasure) -> dict:
    pieces = [[hexf(a), hexf(b), hexf(w)] for a, b, w in zip(meas.lo, meas.hi, meas.weight)]
    return {"coeff": hexf(meas.coeff), "label": meas.label, "pieces": pieces}


def measure_from_dict(d: dict) -> PiecewiseGaussianMeasure:
    arr = np.array([[unhexf(s) for s in row] for row in d["pieces"]]).reshape(-1, 3)
    return PiecewiseGaussianMeasure(unhexf(d["coeff"]), arr[:, 0], arr[:, 1], arr[:, 2], d.get("label", ""))


def family_to_list(fam: IntervalFamily) -> list:
    return [[hexf(a), hexf(b)] for a, b in fam.intervals()]


def family_from_list(rows, label="J") -> IntervalFamily:
    arr = np.array([[unhexf(s) for s in row] for row in rows]).reshape(-1, 2)
    return IntervalFamily(arr[:, 0], arr[:, 1], label)


def target_to_dict(target: VeroneseTarget) -> dict:
    return {
        "basis": target.basis.descriptor(),
        "v": [hexf(x) for x in target.v],
        "poly_coeffs": [hexf(c) for c in target.poly_coeffs],
    }


def target_from_dict(d: dict, J: IntervalFamily) -> VeroneseTarget:
    b = d["basis"]
    basis = MonomialBasis(int(b["m"]), int(b["degree_cap"]))
    return VeroneseTarget(basis, np.array([unhexf(x) for x in d["v"]]), J,
                          np.array([unhexf(c) for c in d["poly_coeffs"]]))


@dataclasses.dataclass(frozen=True)
class Bundle:
    pair: MeasurePair
    direction: np.ndarray
    target: VeroneseTarget | None
    report: dict
    config: dict
    digest: str
    digest_ok: bool
    code_digest: str


def bundle_document(pair: MeasurePair, report: dict, config: dict, direction,
                    target: VeroneseTarget | None = None) -> dict:
    body = {
        "direction": [hexf(x) for x in direction],
        "format": BUNDLE_FORMAT,
        "config": config,
        "code_digest": code_digest(),
        "params": params_to_dict(pair.params),
        "measures": {"plus": measure_to_dict(pair.plus), "minus": measure_to_dict(pair.minus)},
        "J": family_to_list(pair.J),
        "target": target_to_dict(target) if target is not None else None,
        "report": to_jsonable(report),
    }
    body["digest"] = sha256_hex(canonical_json(body))
    return body


def dumps_document(doc: dict) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_bundle(path, pair, report, config, direction, target=None) -> dict:
    doc = bundle_document(pair, report, config, direction, target)
    Path(path).write_text(dumps_document(doc))
    return doc


def read_bundle(path) -> Bundle:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"{path} is not a bundle of format {BUNDLE_FORMAT}")
    stored = doc.pop("digest", "")
    ok = stored == sha256_hex(canonical_json(doc))
    J = family_from_list(doc["J"])
    pair = MeasurePair(
        params_from_dict(doc["params"]),
        measure_from_dict(doc["measures"]["plus"]),
        measure_from_dict(doc["measures"]["minus"]),
        J,
    )
    target = target_from_dict(doc["target"], J) if doc.get("target") else None
    direction = np.array([unhexf(x) for x in doc["direction"]])
    return Bundle(pair, direction, target, doc["report"], doc["config"], stored, ok, doc["code_digest"])


def _record(x, y, t):
    return json.dumps({"t": None if not math.isfinite(t) else t, "x": x, "y": int(y)},
                      sort_keys=True, separators=(",", ":"))


def write_dataset(path, data: LabeledDataset, header: dict, x_rows=None) -> None:
    """Header line, then one ``{t, x, y}`` record per sample.

    ``x_rows`` overrides the stored feature rows (used for lifted vectors).
    """
    head = {"kind": "header", "format": DATASET_FORMAT, "n": len(data), "code_digest": code_digest()}
    head.update(header)
    rows = data.x if x_rows is None else x_rows
    with open(path, "w") as fh:
        fh.write(json.dumps(to_jsonable(head), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n")
        for x, y, t in zip(rows, data.y, data.t):
            fh.write(_record(x.tolist(), y, float(t)) + "\n")


def read_dataset(path) -> tuple[dict, LabeledDataset]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "header":
            raise ValueError(f"{path} does not start with a dataset header")
        xs, ys, ts = [], [], []
        for line in fh:
            rec = json.loads(line)
            xs.append(rec["x"])
            ys.append(rec["y"])
            ts.append(math.nan if rec["t"] is None else rec["t"])
    x = np.array(xs, dtype=float).reshape(len(xs), -1)
    return header, LabeledDataset(x, np.array(ys, dtype=int), np.array(ts, dtype=float))


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _drop_none(d):
    if isinstance(d, dict):
        return {k: _drop_none(v) for k, v in d.items() if v is not None}
    return d


def dumps_config(cfg: dict) -> str:
    return tomli_w.dumps(_drop_none(to_jsonable(cfg)))


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_document(obj))
