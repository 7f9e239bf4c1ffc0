"""File formats: contour tables, binary and real-valued grids, model
parameter and fit configuration records, posterior draws, and the report
files.  All numeric output uses 12 significant digits."""
from __future__ import annotations

import csv
import json

import numpy as np

from .geometry import BinaryGrid, ContourPointSequence
from .model import CredibleRegion, GscmParams, ProbabilityGrid
from .representation import LineSet

FMT = "%.12g"


def _f(x) -> str:
    return FMT % float(x)


class FileFormatError(ValueError):
    """Raised when an input file does not match its documented format."""


# ---------------------------------------------------------------------------
# contour tables: contour_id, vertex_index, x, y

def write_contours(path, contours, ids=None) -> None:
    """Delimiter-separated contour table with a header row.  Vertices are
    written in stored (counterclockwise) order."""
    contours = list(contours)
    if ids is None:
        ids = list(range(len(contours)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["contour_id", "vertex_index", "x", "y"])
        for cid, S in zip(ids, contours):
            pts = S.points if isinstance(S, ContourPointSequence) else np.asarray(S)
            for k, (x, y) in enumerate(pts):
                w.writerow([cid, k, _f(x), _f(y)])


def read_contours(path):
    """Returns (contours, ids); vertices grouped by contour_id in
    vertex_index order."""
    groups = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip().lower() for h in header[:4]] != \
                ["contour_id", "vertex_index", "x", "y"]:
            raise FileFormatError(f"{path}: missing contour table header")
        for row in r:
            if not row or not "".join(row).strip():
                continue
            try:
                cid = row[0].strip()
                k = int(row[1])
                x, y = float(row[2]), float(row[3])
            except (IndexError, ValueError) as e:
                raise FileFormatError(f"{path}: bad contour row {row!r}") from e
            groups.setdefault(cid, []).append((k, x, y))
    if not groups:
        raise FileFormatError(f"{path}: no contour rows")
    contours, ids = [], []
    for cid, rows in groups.items():
        rows.sort(key=lambda t: t[0])
        pts = np.array([(x, y) for _, x, y in rows])
        contours.append(ContourPointSequence(pts))
        ids.append(cid)
    return contours, ids


# ---------------------------------------------------------------------------
# grids: header "rows cols origin_x origin_y cell", then rows of values.
# Row 0 (lowest y) is written first.

def _write_grid(path, rows, cols, origin, cell, values, fmt) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{rows} {cols} {_f(origin[0])} {_f(origin[1])} {_f(cell)}\n")
        for i in range(rows):
            fh.write(" ".join(fmt(v) for v in values[i]) + "\n")


def _read_grid(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise FileFormatError(f"{path}: bad grid header")
        rows, cols = int(header[0]), int(header[1])
        origin = (float(header[2]), float(header[3]))
        cell = float(header[4])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows, cols):
        raise FileFormatError(
            f"{path}: expected {rows}x{cols} values, got {data.shape}")
    return rows, cols, origin, cell, data


def write_binary_grid(path, grid: BinaryGrid) -> None:
    _write_grid(path, grid.rows, grid.cols, grid.origin, grid.cell,
                grid.values.astype(int), lambda v: str(int(v)))


def read_binary_grid(path) -> BinaryGrid:
    rows, cols, origin, cell, data = _read_grid(path)
    if not np.isin(data, (0, 1)).all():
        raise FileFormatError(f"{path}: binary grid values must be 0 or 1")
    return BinaryGrid(rows=rows, cols=cols, origin=origin, cell=cell,
                      values=data.astype(bool))


def write_probability_grid(path, grid: ProbabilityGrid) -> None:
    _write_grid(path, grid.rows, grid.cols, grid.origin, grid.cell,
                grid.values, _f)


def read_probability_grid(path, K: int = 1) -> ProbabilityGrid:
    rows, cols, origin, cell, data = _read_grid(path)
    return ProbabilityGrid(rows=rows, cols=cols, origin=origin, cell=cell,
                           values=data, K=K)


def read_raster(path):
    """Real-valued raster (concentrations in [0, 1]) in the grid format."""
    rows, cols, origin, cell, data = _read_grid(path)
    if data.min() < 0.0 or data.max() > 1.0:
        raise FileFormatError(f"{path}: raster values must lie in [0, 1]")
    return rows, cols, origin, cell, data


def write_credible_region(path, region: CredibleRegion) -> None:
    """Grid format preceded by an ``alpha`` line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"alpha {_f(region.alpha)}\n")
        fh.write(f"{region.rows} {region.cols} {_f(region.origin[0])} "
                 f"{_f(region.origin[1])} {_f(region.cell)}\n")
        for i in range(region.rows):
            fh.write(" ".join(str(int(v)) for v in region.mask[i]) + "\n")


def read_credible_region(path) -> CredibleRegion:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().split()
        if len(first) != 2 or first[0] != "alpha":
            raise FileFormatError(f"{path}: missing alpha line")
        alpha = float(first[1])
        header = fh.readline().split()
        if len(header) != 5:
            raise FileFormatError(f"{path}: bad grid header")
        rows, cols = int(header[0]), int(header[1])
        origin = (float(header[2]), float(header[3]))
        cell = float(header[4])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows, cols):
        raise FileFormatError(f"{path}: mask does not match header dimensions")
    return CredibleRegion(alpha=alpha, rows=rows, cols=cols, origin=origin,
                          cell=cell, mask=data.astype(bool))


# ---------------------------------------------------------------------------
# model parameters

def write_model_params(path, params: GscmParams) -> None:
    rec = {
        "p": params.p,
        "C_x": float(params.lines.C[0]),
        "C_y": float(params.lines.C[1]),
        "theta": [float(_f(v)) for v in params.lines.theta],
        "mu": [float(_f(v)) for v in params.mu],
        "sigma": [float(_f(v)) for v in params.sigma],
        "kappa": float(_f(params.kappa)),
        "eta": float(_f(params.eta)),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2)
        fh.write("\n")


def read_model_params(path) -> GscmParams:
    with open(path, encoding="utf-8") as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"{path}: not a valid parameter file") from e
    try:
        lines = LineSet(C=np.array([rec["C_x"], rec["C_y"]], float),
                        theta=np.asarray(rec["theta"], float))
        if lines.p != int(rec["p"]):
            raise FileFormatError(f"{path}: p does not match theta length")
        return GscmParams(lines=lines, mu=np.asarray(rec["mu"], float),
                          sigma=np.asarray(rec["sigma"], float),
                          kappa=float(rec["kappa"]),
                          eta=float(rec.get("eta", 1e-4)))
    except KeyError as e:
        raise FileFormatError(f"{path}: missing key {e}") from e


def write_line_set(path, lines: LineSet, transform=None, mode=None) -> None:
    """Fitted line set, with the rescale transform record when present."""
    rec = {
        "p": lines.p,
        "C_x": float(lines.C[0]),
        "C_y": float(lines.C[1]),
        "theta": [float(_f(v)) for v in lines.theta],
    }
    if mode is not None:
        rec["mode"] = mode
    if transform is not None:
        rec["rescale"] = {
            "x_min": transform.x_min, "x_max": transform.x_max,
            "y_min": transform.y_min, "y_max": transform.y_max,
            "eps": transform.eps,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2)
        fh.write("\n")


def read_line_set(path):
    """Returns (lines, transform or None, mode or None)."""
    from .fitting import RescaleTransform

    with open(path, encoding="utf-8") as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"{path}: not a valid line-set file") from e
    lines = LineSet(C=np.array([rec["C_x"], rec["C_y"]], float),
                    theta=np.asarray(rec["theta"], float))
    tr = None
    if "rescale" in rec:
        tr = RescaleTransform(**rec["rescale"])
    return lines, tr, rec.get("mode")


# ---------------------------------------------------------------------------
# posterior draws: iter, kappa, mu_1..mu_p, sigma_1..sigma_p

def write_posterior(path, samples) -> None:
    p = samples.p
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "kappa"]
                   + [f"mu_{j + 1}" for j in range(p)]
                   + [f"sigma_{j + 1}" for j in range(p)])
        for k in range(samples.n_draws):
            w.writerow([samples.burnin + k, _f(samples.kappa[k])]
                       + [_f(v) for v in samples.mu[k]]
                       + [_f(v) for v in samples.sigma[k]])


def read_posterior(path, theta=None):
    """Returns a PosteriorSamples; theta defaults to evenly spaced angles
    (draw files do not carry the line set)."""
    from .fitting import PosteriorSamples
    from .representation import LineSet as _LS

    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:2] != ["iter", "kappa"]:
            raise FileFormatError(f"{path}: missing posterior header")
        p = sum(1 for h in header if h.startswith("mu_"))
        if p == 0 or len(header) != 2 + 2 * p:
            raise FileFormatError(f"{path}: malformed posterior columns")
        iters, kappa, mu, sigma = [], [], [], []
        for row in r:
            if not row:
                continue
            iters.append(int(row[0]))
            kappa.append(float(row[1]))
            mu.append([float(v) for v in row[2:2 + p]])
            sigma.append([float(v) for v in row[2 + p:2 + 2 * p]])
    if not kappa:
        raise FileFormatError(f"{path}: no posterior draws")
    if theta is None:
        theta = _LS.evenly_spaced(np.zeros(2), p).theta
    return PosteriorSamples(mu=np.array(mu), sigma=np.array(sigma),
                            kappa=np.array(kappa),
                            theta=np.asarray(theta, float),
                            acceptance={}, seed=-1, burnin=int(iters[0]))


# ---------------------------------------------------------------------------
# reports

def write_coverage_report(path, report) -> None:
    """Per-line means as ``k, theta_k, coverage``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "theta_k", "coverage"])
        for k, (t, c) in enumerate(zip(report.theta, report.per_line_mean)):
            w.writerow([k + 1, _f(t), _f(c)])


def write_coverage_summary(path, rows) -> None:
    """Summary rows of (alpha, mean, sd_across_lines)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "mean", "sd_across_lines"])
        for alpha, mean, sd in rows:
            w.writerow([_f(alpha), _f(mean), _f(sd)])


def write_starshape_report(path, entries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["contour_id", "mode", "pct_differing_area", "C_x", "C_y"])
        for e in entries:
            w.writerow([e.contour_id, e.mode, _f(e.pct_differing_area),
                        _f(e.C[0]), _f(e.C[1])])


# ---------------------------------------------------------------------------
# fit / experiment configuration

def read_config(path) -> dict:
    """Structured config with keys mirroring the fit and experiment
    settings; unknown keys are rejected up front."""
    with open(path, encoding="utf-8") as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"{path}: not a valid config file") from e
    if not isinstance(rec, dict):
        raise FileFormatError(f"{path}: config must be a mapping")
    return rec
