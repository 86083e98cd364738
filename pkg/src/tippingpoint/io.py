"""Dataset CSV ingestion and result artifacts (CSV tables, SVG figures).

Dataset files look like::

    # cutoff=15
    id,arm,time,event,reason,covariate
    S0001,0,3.25,1,admin,-0.41
    S0002,1,1.10,0,dropout,

``covariate`` is optional; lines starting with ``#`` are comments.  Floats
are written with ``repr`` so that a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import math
import re
from xml.sax.saxutils import escape

import numpy as np

from .survival import TrialDataset, km_fit

REQUIRED = ("id", "arm", "time", "event", "reason")
_CUTOFF = re.compile(r"^#\s*cutoff\s*=\s*(\S+)\s*$")


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message names the offending line."""


def read_dataset(path, cutoff=None):
    """Parse a dataset CSV.

    ``cutoff`` overrides a ``# cutoff=`` directive in the file; one of the two
    is required.
    """
    directive = None
    rows = []
    header = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                m = _CUTOFF.match(stripped)
                if m:
                    directive = _number(m.group(1), lineno, "cutoff")
                continue
            cells = next(csv.reader([stripped]))
            if header is None:
                header = [c.strip() for c in cells]
                missing = [c for c in REQUIRED if c not in header]
                if missing:
                    raise DatasetFormatError(f"line {lineno}: missing column(s) {', '.join(missing)}")
                continue
            if len(cells) != len(header):
                raise DatasetFormatError(
                    f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
            rows.append((lineno, dict(zip(header, (c.strip() for c in cells)))))
    if header is None:
        raise DatasetFormatError(f"{path}: no header line")
    if cutoff is None:
        cutoff = directive
    if cutoff is None:
        raise DatasetFormatError(f"{path}: no '# cutoff=' directive and no cutoff supplied")
    if not (cutoff > 0 and math.isfinite(cutoff)):
        raise DatasetFormatError(f"{path}: cutoff must be positive, got {cutoff}")

    ids, arm, time, event, dropout, cov = [], [], [], [], [], []
    seen = {}
    has_cov = "covariate" in header
    for lineno, row in rows:
        sid = row["id"]
        if not sid:
            raise DatasetFormatError(f"line {lineno}: empty id")
        if sid in seen:
            raise DatasetFormatError(f"line {lineno}: duplicate id {sid!r} (first on line {seen[sid]})")
        seen[sid] = lineno
        a = row["arm"]
        if a not in ("0", "1"):
            raise DatasetFormatError(f"line {lineno}: arm must be 0 or 1, got {a!r}")
        t = _number(row["time"], lineno, "time")
        if t < 0:
            raise DatasetFormatError(f"line {lineno}: negative time {t}")
        if t > cutoff:
            raise DatasetFormatError(f"line {lineno}: time {t} exceeds cutoff {cutoff}")
        e = row["event"]
        if e not in ("0", "1"):
            raise DatasetFormatError(f"line {lineno}: event must be 0 or 1, got {e!r}")
        reason = row["reason"].lower()
        if reason not in ("admin", "dropout"):
            raise DatasetFormatError(
                f"line {lineno}: reason must be 'admin' or 'dropout', got {row['reason']!r}")
        x = row.get("covariate", "") if has_cov else ""
        ids.append(sid)
        arm.append(int(a))
        time.append(t)
        event.append(e == "1")
        dropout.append(reason == "dropout")
        cov.append(_number(x, lineno, "covariate") if x else math.nan)
    return TrialDataset(ids, arm, time, event, dropout, cutoff, covariate=cov)


def _number(text, lineno, name):
    try:
        value = float(text)
    except ValueError:
        raise DatasetFormatError(f"line {lineno}: {name} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DatasetFormatError(f"line {lineno}: {name} must be finite, got {text!r}")
    return value


def write_dataset(dataset, path):
    has_cov = not np.all(np.isnan(dataset.covariate))
    with open(path, "w", newline="") as fh:
        fh.write(f"# cutoff={dataset.cutoff!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REQUIRED + (("covariate",) if has_cov else ()))
        for r in dataset.records:
            row = [r.id, r.arm, repr(r.time), int(r.event), r.reason.value]
            if has_cov:
                row.append("" if r.covariate is None else repr(r.covariate))
            w.writerow(row)


# --------------------------------------------------------------------------
# Result tables
# --------------------------------------------------------------------------

SWEEP_COLUMNS = ("param", "pooled_hr", "ci_low", "ci_high", "tipped")


def write_sweep_csv(sweep, path):
    """One row per grid value; ``tipped`` is 1 where the criterion value is at least 1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for g, p in zip(sweep.grid, sweep.points):
            tipped = int(p.criterion_value(sweep.criterion) >= 1.0)
            w.writerow([repr(float(g)), repr(p.pooled_hr), repr(p.ci_low), repr(p.ci_high), tipped])


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "tipped" else float(v)) for k, v in r.items()} for r in rows]


def curve_points(curve):
    """Step-curve vertices starting at ``(0, 1)``."""
    times = np.concatenate(([0.0], np.asarray(curve.times, dtype=float)))
    surv = np.concatenate(([1.0], np.asarray(curve.survival, dtype=float)))
    return times, surv


def write_km_csv(curves, path):
    """Long-format survival curves: ``source,time,survival``.

    ``curves`` maps a source tag to a KmCurve or PooledKmCurve.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "time", "survival"))
        for tag, curve in curves.items():
            for t, s in zip(*curve_points(curve)):
                w.writerow([tag, repr(float(t)), repr(float(s))])


TABLE_COLUMNS = ("scenario", "imbalance", "gamma", "true_hr", "mean_obs_hr", "signif_pct",
                 "dropout_ctr_pct", "dropout_exp_pct", "n_trials")


def write_summary_csv(rows, path_or_file):
    """Scenario summaries; ``rows`` holds ``(label, SimulationConfig, ScenarioSummary)``."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for label, cfg, s in rows:
            w.writerow([label, cfg.scenario.value, repr(cfg.gamma), repr(cfg.true_hr),
                        repr(s.mean_obs_hr), repr(s.signif_pct), repr(s.dropout_ctr_pct),
                        repr(s.dropout_exp_pct), s.n_trials])
    finally:
        if own:
            fh.close()


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

_W, _H, _PAD = 640, 420, 50
_STYLES = {
    "original": 'stroke="#e67e22" stroke-width="2.5" fill="none"',
    "imputed": 'stroke="#9e9e9e" stroke-width="1" fill="none" stroke-opacity="0.7"',
    "tipping": 'stroke="#c0392b" stroke-width="2.5" fill="none"',
    "reference": 'stroke="#8e44ad" stroke-width="2" fill="none" stroke-dasharray="6,3"',
}


def _svg_path(curve, t_max, style, label):
    times, surv = curve_points(curve)
    times = np.append(times, t_max)
    surv = np.append(surv, surv[-1])

    def xy(t, s):
        x = _PAD + (_W - 2 * _PAD) * (t / t_max)
        y = _H - _PAD - (_H - 2 * _PAD) * s
        return f"{x:.2f},{y:.2f}"

    d = [f"M{xy(times[0], surv[0])}"]
    for i in range(1, times.size):
        d.append(f"H{xy(times[i], surv[i - 1]).split(',')[0]}")
        d.append(f"V{xy(times[i], surv[i]).split(',')[1]}")
    return f'<path d="{" ".join(d)}" {_STYLES[style]}><title>{escape(label)}</title></path>'


def write_km_svg(original, imputed, path, tipping=None, reference=None, t_max=None, title=""):
    """Kaplan-Meier shift plot.

    Parameters
    ----------
    original : curve
        Target arm before imputation.
    imputed : mapping of label to curve
        Pooled imputed curves, one per sweep point.
    tipping : curve, optional
        Pooled curve at the tipping point.
    reference : curve, optional
        The arm that was not imputed.

    Each curve becomes exactly one ``<path>`` element; axes use ``<line>``.
    """
    curves = [(f"imputed {k}", v, "imputed") for k, v in imputed.items()]
    curves.append(("original", original, "original"))
    if reference is not None:
        curves.append(("reference arm", reference, "reference"))
    if tipping is not None:
        curves.append(("tipping point", tipping, "tipping"))
    if t_max is None:
        ends = [float(np.max(c.times)) for _, c, _ in curves if len(c.times)]
        t_max = max(ends) if ends else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
             f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _H - _PAD - (_H - 2 * _PAD) * frac
        x = _PAD + (_W - 2 * _PAD) * frac
        parts.append(f'<text x="{_PAD - 8}" y="{y + 4:.1f}" font-size="11" '
                     f'text-anchor="end">{frac:.2f}</text>')
        parts.append(f'<text x="{x:.1f}" y="{_H - _PAD + 16}" font-size="11" '
                     f'text-anchor="middle">{frac * t_max:.3g}</text>')
    parts.append(f'<text x="{_W / 2}" y="{_H - 10}" font-size="12" text-anchor="middle">'
                 f'Time (months)</text>')
    if title:
        parts.append(f'<text x="{_W / 2}" y="24" font-size="14" text-anchor="middle">'
                     f'{escape(title)}</text>')
    for label, curve, style in curves:
        parts.append(_svg_path(curve, t_max, style, label))
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def km_by_arm(dataset):
    return {arm: km_fit(dataset.time[dataset.arm == arm], dataset.event[dataset.arm == arm])
            for arm in (0, 1)}

