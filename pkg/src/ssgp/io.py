"""CSV and JSON persistence.

All JSON is written canonically (sorted keys, fixed indentation, no
timestamps) and all CSV floats use repr, so identical inputs and seeds
produce byte-identical files.  Readers validate shape and numeric content
and name the offending row or column in error messages.
"""

import json

import numpy as np

from .gp import Dataset, GpParams
from .sampler import Chain

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def save_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _read_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh if ln.strip() != ""]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    rows = [[c.strip() for c in ln.split(",")] for ln in lines[1:]]
    return header, rows


def _parse_cell(cell, row_idx, col_name, path):
    try:
        return float(cell)
    except ValueError:
        raise ValueError(
            f"{path}: non-numeric value {cell!r} in row {row_idx}, column {col_name}"
        ) from None


def _parse_table(path, header, rows):
    out = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ValueError(
                f"{path}: row {i} has {len(row)} fields, expected {len(header)}"
            )
        for j, cell in enumerate(row):
            out[i - 2, j] = _parse_cell(cell, i, header[j], path)
    return out


def _expect_x_columns(path, names):
    expected = [f"x{k + 1}" for k in range(len(names))]
    if list(names) != expected:
        raise ValueError(
            f"{path}: design columns must be {','.join(expected)}, got {','.join(names)}"
        )


def peek_header(path) -> list:
    """Column names of a CSV without parsing the body."""
    header, _ = _read_rows(path)
    return header


def read_design_csv(path) -> np.ndarray:
    """Design matrix from a CSV with header x1,...,xd."""
    header, rows = _read_rows(path)
    _expect_x_columns(path, header)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return _parse_table(path, header, rows)


def read_response_csv(path) -> np.ndarray:
    """Response vector from a single-column CSV with header y."""
    header, rows = _read_rows(path)
    if header != ["y"]:
        raise ValueError(f"{path}: response file must have the single column y")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return _parse_table(path, header, rows).ravel()


def read_data_csv(path):
    """Combined CSV (x1,...,xd,y): returns (points, responses)."""
    header, rows = _read_rows(path)
    if len(header) < 2 or header[-1] != "y":
        raise ValueError(
            f"{path}: combined data needs columns x1,...,xd followed by y"
        )
    _expect_x_columns(path, header[:-1])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = _parse_table(path, header, rows)
    return table[:, :-1], table[:, -1]


def write_design_csv(path, points) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    header = ",".join(f"x{k + 1}" for k in range(pts.shape[1]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in pts:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_predictions_csv(path, means, mses) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mean,mse\n")
        for m, s in zip(means, mses):
            fh.write(f"{repr(float(m))},{repr(float(s))}\n")


def _dataset_block(data: Dataset) -> dict:
    return {
        "points": [[float(v) for v in row] for row in data.points],
        "responses": [float(v) for v in data.responses],
        "ranges": [[float(a), float(b)] for a, b in data.ranges],
    }


def _dataset_from_block(block) -> Dataset:
    return Dataset(
        np.asarray(block["points"], dtype=float),
        np.asarray(block["responses"], dtype=float),
        np.asarray(block["ranges"], dtype=float),
    )


def save_model(path, params: GpParams, data: Dataset, extra=None) -> None:
    """Fitted parameters plus the training data they condition on."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "gp-model",
        "mu": float(params.mu),
        "sigma2": float(params.sigma2),
        "phi": [float(v) for v in params.phi],
        "theta": [float(v) for v in params.theta],
        "dataset": _dataset_block(data),
        "dataset_fingerprint": data.fingerprint(),
    }
    if extra:
        doc["meta"] = extra
    save_json(path, doc)


def load_model(path):
    doc = load_json(path)
    if doc.get("kind") != "gp-model":
        raise ValueError(f"{path}: not a gp-model document")
    params = GpParams(
        mu=float(doc["mu"]), sigma2=float(doc["sigma2"]), phi=np.asarray(doc["phi"])
    )
    return params, _dataset_from_block(doc["dataset"])


def save_chain(path, chain: Chain, data: Dataset) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "chain",
        "meta": chain.meta,
        "accept_rate": float(chain.accept_rate),
        "draws": {
            "scan": [int(v) for v in chain.scans],
            "mu": [float(v) for v in chain.mu],
            "sigma2": [float(v) for v in chain.sigma2],
            "phi": [[float(v) for v in row] for row in chain.phi],
            "gamma": [[int(v) for v in row] for row in chain.gamma],
        },
        "dataset": _dataset_block(data),
    }
    save_json(path, doc)


def load_chain(path):
    doc = load_json(path)
    if doc.get("kind") != "chain":
        raise ValueError(f"{path}: not a chain document")
    draws = doc["draws"]
    chain = Chain(
        mu=np.asarray(draws["mu"], dtype=float),
        sigma2=np.asarray(draws["sigma2"], dtype=float),
        phi=np.asarray(draws["phi"], dtype=float),
        gamma=np.asarray(draws["gamma"], dtype=np.int64),
        scans=np.asarray(draws["scan"], dtype=np.int64),
        accept_rate=float(doc["accept_rate"]),
        meta=doc["meta"],
    )
    return chain, _dataset_from_block(doc["dataset"])


def save_selection(path, report, table, extra=None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "selection-report",
        "modal_gamma": [int(g) for g in report.modal_gamma],
        "modal_freq": float(report.modal_freq),
        "marginal_inclusion": [float(v) for v in report.marginal],
        "selected": sorted(int(k) for k in report.selected),
        "rule": report.rule,
        "tie": bool(report.tie),
        "gamma_table": [
            {"gamma": [int(g) for g in vec], "freq": float(freq)} for vec, freq in table.rows
        ],
    }
    if extra:
        doc["meta"] = extra
    save_json(path, doc)


def load_trace(path) -> Chain:
    """Rebuild a Chain from an exported trace CSV (no meta, rate unknown)."""
    header, rows = _read_rows(path)
    if header[:3] != ["scan", "mu", "sigma2"] or (len(header) - 3) % 2 != 0:
        raise ValueError(f"{path}: not a trace CSV")
    d = (len(header) - 3) // 2
    expected = ["scan", "mu", "sigma2"] + [f"phi_{k + 1}" for k in range(d)] + [
        f"gamma_{k + 1}" for k in range(d)
    ]
    if header != expected:
        raise ValueError(f"{path}: trace columns must be {','.join(expected)}")
    table = _parse_table(path, header, rows)
    return Chain(
        mu=table[:, 1],
        sigma2=table[:, 2],
        phi=table[:, 3 : 3 + d],
        gamma=table[:, 3 + d :].astype(np.int64),
        scans=table[:, 0].astype(np.int64),
        accept_rate=float("nan"),
        meta={},
    )
