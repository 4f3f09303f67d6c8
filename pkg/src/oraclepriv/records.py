"""Append-only JSON-lines run records and the output digest used for replay."""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .errors import InputError

RECORD_FILE = "runs.jsonl"


def source_version() -> str:
    from . import __version__

    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+{rev}" if rev else __version__


def digest(payload) -> str:
    """SHA-256 of the canonical JSON form of ``payload``."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    command: str
    params: dict
    seed: int
    status: str  # ok | fail | input-error | capacity-error
    exit_code: int
    output: dict = field(default_factory=dict)
    oracle_calls: int = 0
    wall_time: float = 0.0
    version: str = ""
    timestamp: float = field(default_factory=time.time)
    output_digest: str = ""

    def __post_init__(self):
        if not self.output_digest:
            self.output_digest = digest(self.output)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        try:
            data = json.loads(line)
            return cls(**data)
        except (json.JSONDecodeError, TypeError) as exc:
            raise InputError(f"malformed run record: {exc}") from None


def append_record(out_dir, record: RunRecord) -> Path:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / RECORD_FILE
    with open(path, "a") as fh:
        fh.write(record.to_json() + "\n")
    return path


def load_records(path) -> list[RunRecord]:
    p = Path(path)
    if p.is_dir():
        p = p / RECORD_FILE
    try:
        lines = p.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read records {p}: {exc.strerror}") from None
    return [RunRecord.from_json(line) for line in lines if line.strip()]


def select_record(records: list[RunRecord], index: Optional[int]) -> RunRecord:
    if not records:
        raise InputError("no run records found")
    try:
        return records[-1 if index is None else index]
    except IndexError:
        raise InputError(f"record index {index} out of range ({len(records)} records)") from None
