"""Report emission: CSV tables, newline-delimited JSON and run manifests."""

import csv
import io
import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO

from .. import __version__
from ..core.logging_config import get_logger


def _flatten(value: Any) -> Any:
    """CSV cells hold scalars; nested values are written as compact JSON."""
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


def encode_record(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class ReportWriter:
    """Writes one run's records and its manifest.

    Records are written in the order they are given. Timings only appear in
    the manifest, so identical configurations produce identical reports.

    Args:
        output_path: Report file, or None for stdout
        output_format: 'csv' or 'json' (newline-delimited records)
        stream: Stream used when no output path is given
    """

    def __init__(
        self,
        output_path: Optional[str] = None,
        output_format: str = "json",
        stream: Optional[TextIO] = None,
    ):
        if output_format not in ("csv", "json"):
            raise ValueError(f"Unknown output format '{output_format}'")
        self.output_path = Path(output_path) if output_path else None
        self.output_format = output_format
        self.stream = stream
        self.logger = get_logger("ReportWriter")
        self.timings: Dict[str, float] = {}
        self.record_count = 0

    @contextmanager
    def timed(self, label: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[label] = round(time.perf_counter() - start, 6)

    def render(self, records: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
        """Render records in the configured format."""
        if self.output_format == "json":
            return "".join(encode_record(r) + "\n" for r in records)
        if columns is None:
            columns = list(records[0].keys()) if records else []
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({k: _flatten(record.get(k)) for k in columns})
        return buffer.getvalue()

    def write(self, records: Iterable[Dict[str, Any]], columns: Optional[List[str]] = None) -> None:
        records = list(records)
        text = self.render(records, columns)
        if self.output_path is None:
            (self.stream or sys.stdout).write(text)
        else:
            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.output_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        self.record_count = len(records)
        self.logger.info("wrote report", records=len(records),
                         target=str(self.output_path or "stdout"), format=self.output_format)

    @property
    def manifest_path(self) -> Optional[Path]:
        if self.output_path is None:
            return None
        return self.output_path.with_name(self.output_path.name + ".manifest.json")

    def manifest(
        self,
        command: str,
        config: Dict[str, Any],
        status: str,
        summary: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        return {
            "command": command,
            "config": config,
            "version": __version__,
            "status": status,
            "records": self.record_count,
            "timings": dict(self.timings),
            "summary": summary or {},
        }

    def write_manifest(
        self,
        command: str,
        config: Dict[str, Any],
        status: str,
        summary: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Write the manifest beside the report (on stderr for stdout reports)."""
        manifest = self.manifest(command, config, status, summary)
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        target = self.manifest_path
        if target is None:
            sys.stderr.write(text)
        else:
            with open(target, "w", encoding="utf-8") as f:
                f.write(text)
            self.logger.debug("wrote manifest", path=str(target))
        return manifest
