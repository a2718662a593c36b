"""Markdown and CSV rendering of evaluation reports and WERR curves."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .align import percent
from .errors import IoFailure, ValidationError
from .evaluate import EvalReport
from .oracle import STREAMS

FORMATS = ("md", "csv")
NA = "n/a"


def fraction(value: float, places: int = 3) -> str:
    """Raw fraction with fixed decimals, rounding half up."""
    if math.isnan(value):
        return NA
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def _pct(value: float) -> str:
    return NA if math.isnan(value) else percent(value)


def _rel_change(werr: float) -> float:
    # relative change of WER vs the baseline; negative means fewer errors
    return -werr if werr else 0.0


def wer_cell(wer: float, werr: float | None = None) -> str:
    """``13.2 (-48.8%)``; the baseline (``werr=None``) gets no parenthetical."""
    cell = _pct(wer)
    if werr is None:
        return cell
    if math.isnan(werr):
        return f"{cell} ({NA})"
    rel = _rel_change(werr)
    sign = "-" if rel < 0 else "+" if rel > 0 else ""
    return f"{cell} ({sign}{percent(abs(rel))}%)"


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def render_markdown(report: EvalReport) -> str:
    cols = report.columns()
    header = ["System"] + [name for name, _ in cols]
    rows = [["Records"] + [str(st.n_records) for _, st in cols]]
    for stream in STREAMS:
        cells = []
        for _, st in cols:
            onb, ocp = st.oracle_wer(stream)
            cells.append(f"{_pct(onb)} / {_pct(ocp)}")
        rows.append([f"Oracle {stream} (o_nb / o_cp)"] + cells)
    for system in report.systems:
        is_base = system == report.baseline
        label = f"{system} (baseline)" if is_base else system
        rows.append([label] + [
            wer_cell(report.wer(system, name), None if is_base else report.werr(system, name))
            for name, _ in cols
        ])
    mean = "per-utterance mean" if report.utterance_mean else "corpus"
    lines = [f"WER % ({mean}); relative change vs {report.baseline} in parentheses.", ""]
    lines += _md_table(header, rows)
    lines += ["", f"Evaluated {report.n_evaluated} of {report.n_input} records; {len(report.skipped)} skipped."]
    for rid, reason in sorted(report.skipped.items()):
        lines.append(f"- skipped {rid}: {reason}")
    return "\n".join(lines) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_csv(report: EvalReport) -> str:
    """Long format: one row per (group, system); oracle rows have no relative change."""
    rows = []
    for name, st in report.columns():
        for stream in STREAMS:
            onb, ocp = st.oracle_wer(stream)
            rows.append([name, f"oracle_nb_{stream}", str(st.n_records), fraction(onb), ""])
            rows.append([name, f"oracle_cp_{stream}", str(st.n_records), fraction(ocp), ""])
        for system in report.systems:
            rel = ""
            if system != report.baseline:
                w = report.werr(system, name)
                rel = NA if math.isnan(w) else fraction(_rel_change(w))
            rows.append([name, system, str(st.n_records), fraction(report.wer(system, name)), rel])
    return _csv_text(["group", "system", "n_records", "wer", "rel_change"], rows)


def render_curve(curves: dict[str, list[tuple[float, float]]], fmt: str = "csv") -> str:
    """WERR per SNR bucket for each system; plot-ready in CSV form."""
    _check_format(fmt)
    if fmt == "csv":
        rows = [[system, repr(float(snr)), fraction(w)] for system, pts in curves.items() for snr, w in pts]
        return _csv_text(["system", "snr_db", "werr"], rows)
    rows = [[system, f"{snr:g}", NA if math.isnan(w) else percent(w)] for system, pts in curves.items() for snr, w in pts]
    return "\n".join(_md_table(["System", "SNR (dB)", "WERR %"], rows)) + "\n"


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValidationError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def emit_report(report: EvalReport, fmt: str = "md", path: str | Path | None = None) -> str:
    """Render ``report`` and, when ``path`` is given, write it there."""
    _check_format(fmt)
    text = render_markdown(report) if fmt == "md" else render_csv(report)
    if path is not None:
        write_text(path, text)
    return text


def write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc
