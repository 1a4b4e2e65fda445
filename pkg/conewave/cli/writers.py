import csv
import io
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from conewave import __version__
from conewave.core.config import settings
from conewave.models.schemas import EstimateReport, RunConfig


def format_value(value: Any) -> str:
    """Numbers with CSV_DIGITS significant digits; everything else as text."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{settings.CSV_DIGITS}g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    cfg: RunConfig,
    digest: str,
    metadata: Optional[Dict[str, Any]] = None,
) -> str:
    out = io.StringIO()
    out.write(f"# conewave {__version__}\n")
    out.write(f"# command = {cfg.command}\n")
    out.write(f"# config_hash = {digest}\n")
    for key, value in (metadata or {}).items():
        out.write(f"# {key} = {format_value(value)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(header) + ["config_hash"])
    for row in rows:
        writer.writerow([format_value(v) for v in row] + [digest])
    return out.getvalue()


def emit(text: str, path: Optional[str]) -> None:
    """Write to ``path`` (creating its directory) or to stdout."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


def emit_in_dir(text: str, directory: Optional[str], name: str) -> Optional[str]:
    if directory is None:
        return None
    path = str(Path(directory) / name)
    emit(text, path)
    return path


def render_reports(reports: List[EstimateReport]) -> str:
    if len(reports) == 1:
        return reports[0].to_json() + "\n"
    return "[\n" + ",\n".join(r.to_json() for r in reports) + "\n]\n"


def render_table(reports: List[EstimateReport]) -> str:
    """Plain pass/fail table for the terminal."""
    width = max([len(r.check_name) for r in reports] + [5])
    lines = [f"{'check'.ljust(width)}  result"]
    for r in reports:
        status = "reported" if r.passed is None else ("pass" if r.passed else "FAIL")
        lines.append(f"{r.check_name.ljust(width)}  {status}")
    return "\n".join(lines) + "\n"
