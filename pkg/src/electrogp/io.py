"""CSV datasets, model JSON documents and result exports."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .corp import CorpConfig
from .exceptions import DataIntegrityError
from .gpcore import KernelParams
from .model import FittedModel, HyperParams, LatentConfig

FORMAT = "electrogp-model"
FORMAT_VERSION = 1


class CsvFormatError(ValueError):
    def __init__(self, path, row, column, message):
        self.row, self.column = row, column
        where = f"row {row}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{path}: {where}: {message}")


def read_csv(path, allow_missing=False):
    """Read a headered numeric CSV into ``(header, array)``.

    Empty fields become NaN when ``allow_missing`` is set and are an error
    otherwise. Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(path, 1, None, "file is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(path, lineno, None, f"expected {len(header)} fields, found {len(row)}")
            vals = []
            for col, cell in enumerate(row, start=1):
                cell = cell.strip()
                if not cell:
                    if not allow_missing:
                        raise CsvFormatError(path, lineno, col, "missing value")
                    vals.append(math.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(path, lineno, col, f"not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise CsvFormatError(path, lineno, col, f"non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CsvFormatError(path, 2, None, "no data rows")
    return header, np.array(rows, dtype=float)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(v)
    return "" if math.isnan(v) else repr(float(v))


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows if isinstance(rows, list) else np.atleast_2d(rows):
            w.writerow([_fmt(v) for v in row])


def default_header(d):
    return [f"y{j + 1}" for j in range(d)]


def data_checksum(data) -> str:
    a = np.ascontiguousarray(np.asarray(data, dtype="<f8"))
    h = hashlib.sha256()
    h.update(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


# -- model documents -----------------------------------------------------------------


def model_to_dict(model: FittedModel) -> dict:
    cfg = model.corp_cfg
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "n": model.n,
        "d": model.d,
        "data_sha256": data_checksum(model.data),
        "latent": [float(v) for v in model.latent.xs],
        "hyperparameters": [
            {"phi": p.phi, "alpha": p.alpha, "sigma2": p.sigma2} for p in model.theta.dims
        ],
        # The optimiser works on logs; keeping them avoids a one-ulp exp/log drift.
        "log_hyperparameters": [[p.log_phi, p.log_alpha, p.log_sigma2] for p in model.theta.dims],
        "corp": {
            "r": cfg.r,
            "quad_points": cfg.quad_points,
            "max_attempts": cfg.max_attempts,
            "envelope": cfg.envelope,
            "mode_tol": cfg.mode_tol,
        },
        "use_prior": model.use_prior,
        "centering": None if model.centering is None else [float(v) for v in model.centering],
        "objective": model.objective_value,
        "stage_values": model.stage_values,
    }


def save_model(model: FittedModel, path):
    # json writes floats with repr, the shortest string that parses back to
    # the same double, so the round trip is exact.
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def model_from_dict(doc: dict, data) -> FittedModel:
    if doc.get("format") != FORMAT:
        raise DataIntegrityError("not an electrogp model document")
    data = np.asarray(data, dtype=float)
    if data.shape != (doc["n"], doc["d"]):
        raise DataIntegrityError(
            f"data has shape {data.shape}, model was fitted on ({doc['n']}, {doc['d']})"
        )
    if data_checksum(data) != doc["data_sha256"]:
        raise DataIntegrityError("data checksum does not match the one stored in the model")
    if "log_hyperparameters" in doc:
        dims = tuple(KernelParams(*map(float, h)) for h in doc["log_hyperparameters"])
    else:
        dims = tuple(KernelParams.natural(h["phi"], h["alpha"], h["sigma2"]) for h in doc["hyperparameters"])
    theta = HyperParams(dims)
    centering = doc.get("centering")
    model = FittedModel(
        data=data,
        latent=LatentConfig(np.array(doc["latent"], dtype=float)),
        theta=theta,
        corp_cfg=CorpConfig(**doc["corp"]),
        centering=None if centering is None else np.array(centering, dtype=float),
        use_prior=bool(doc.get("use_prior", True)),
        objective_value=float(doc["objective"]),
    )
    model.stage_values = dict(doc.get("stage_values", {}))
    return model


def load_model(path, data) -> FittedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataIntegrityError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc, data)


# -- exports ------------------------------------------------------------------------------


def write_curve(path, curve):
    d = curve.vertices.shape[1]
    write_csv(path, ["x_mu"] + [f"mu_{j + 1}" for j in range(d)], np.column_stack([curve.grid, curve.vertices]))


def read_curve(path):
    from .inference import CurveEstimate

    header, a = read_csv(path)
    if header[0] != "x_mu":
        raise CsvFormatError(path, 1, 1, "expected an x_mu column")
    return CurveEstimate(a[:, 0], a[:, 1:])


def write_band(csv_path, json_path, band):
    write_csv(csv_path, ["distance"], band.sample_distances[:, None])
    summary = {"eta": band.eta, "rho": band.rho, "n1": band.n1, "n2": band.n2, "seed": band.seed}
    Path(json_path).write_text(json.dumps(summary, indent=2) + "\n")


def read_band_summary(json_path) -> dict:
    doc = json.loads(Path(json_path).read_text())
    for key in ("eta", "rho", "n1", "n2"):
        if key not in doc:
            raise DataIntegrityError(f"{json_path}: band summary lacks {key!r}")
    return doc


def write_predictions(path, predictions, d):
    """One row per record: latent point, then mean and sd of every dimension.

    Observed entries are echoed with sd 0.
    """
    header = ["record", "latent"] + [f"mean_{j + 1}" for j in range(d)] + [f"sd_{j + 1}" for j in range(d)]
    rows = []
    for i, (obs, pred) in enumerate(predictions):
        mean = obs.values.copy()
        sd = np.zeros(d)
        rec = pred.reconstruction
        mean[rec.missing_dims] = rec.mean
        sd[rec.missing_dims] = rec.sd
        rows.append([i, pred.latent.point, *mean, *sd])
    write_csv(path, header, rows)
