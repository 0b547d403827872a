"""Line-oriented result files with YAML front matter.

Every file starts with a tag line ``# sidlab:<kind> v<version>``. Structured
kinds follow with a ``---`` delimited YAML header, whitespace-separated
numeric rows, and an optional ``---`` delimited YAML footer::

    # sidlab:campaign v1
    ---
    model_hash: 3f0c...
    ---
    0 0.7071067811865476 12.5 0
    ---
    fit: {...}
    ---
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import TracebackType
from typing import TYPE_CHECKING, Any, TextIO

import numpy as np
import yaml
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import FormatVersionError
from sidlab.exits.fit import KramersFit, SigmaSamples
from sidlab.measure.empirical import EmpiricalMeasure

if TYPE_CHECKING:
    from sidlab.exits.campaign import ExitCampaignResult

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DELIMITER = "---"
TAG_PREFIX = "# sidlab:"

RECORD_KINDS = ("measure", "trajectory", "campaign", "plot", "manifest")


class RecordDumper(yaml.SafeDumper):
    """SafeDumper that also writes numpy scalars and never wraps lines."""


def _float_representer(dumper: yaml.SafeDumper, data: Any) -> yaml.ScalarNode:
    return dumper.represent_float(float(data))


def _int_representer(dumper: yaml.SafeDumper, data: Any) -> yaml.ScalarNode:
    return dumper.represent_int(int(data))


def _array_representer(dumper: yaml.SafeDumper, data: Any) -> yaml.SequenceNode:
    return dumper.represent_list(data.tolist())


RecordDumper.add_multi_representer(np.floating, _float_representer)
RecordDumper.add_multi_representer(np.integer, _int_representer)
RecordDumper.add_representer(np.ndarray, _array_representer)
RecordDumper.add_representer(np.bool_, lambda d, v: d.represent_bool(bool(v)))
RecordDumper.add_representer(tuple, lambda d, v: d.represent_list(list(v)))


def dump_yaml(data: dict[str, Any]) -> str:
    return yaml.dump(
        data,
        Dumper=RecordDumper,
        default_flow_style=False,
        allow_unicode=True,
        sort_keys=False,
        width=10000,
    )


def format_number(value: float) -> str:
    """Shortest round-trip representation, so reruns compare byte for byte."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def tag_line(kind: str, version: int = FORMAT_VERSION) -> str:
    return f"{TAG_PREFIX}{kind} v{version}"


def check_tag(line: str, kind: str, version: int = FORMAT_VERSION) -> None:
    """Raise FormatVersionError unless ``line`` is the tag of ``kind`` at ``version``."""
    line = line.strip()
    if not line.startswith(TAG_PREFIX):
        raise FormatVersionError(f"Missing sidlab format tag (got {line[:40]!r})")
    found_kind, _, found_version = line[len(TAG_PREFIX):].partition(" v")
    if found_kind != kind:
        raise FormatVersionError(f"Expected a {kind} file, found {found_kind}")
    if found_version != str(version):
        raise FormatVersionError(f"Unsupported {kind} format version {found_version or '?'}")


@dataclass
class Record:
    """Parsed contents of a structured result file."""

    kind: str
    header: dict[str, Any]
    rows: NDArray[np.float64]
    footer: dict[str, Any] = field(default_factory=dict)


def render_record(
    kind: str,
    header: dict[str, Any],
    rows: Iterable[Sequence[float]] = (),
    footer: dict[str, Any] | None = None,
) -> str:
    parts = [tag_line(kind), DELIMITER, dump_yaml(header).rstrip("\n"), DELIMITER]
    parts.extend(" ".join(format_number(v) for v in row) for row in rows)
    if footer:
        parts.extend([DELIMITER, dump_yaml(footer).rstrip("\n"), DELIMITER])
    return "\n".join(parts) + "\n"


def parse_record(text: str, kind: str) -> Record:
    """Parse :func:`render_record` output.

    Raises:
        FormatVersionError: On a wrong tag, kind or version, or broken delimiters.
    """
    lines = text.splitlines()
    if not lines:
        raise FormatVersionError("Empty result file")
    check_tag(lines[0], kind)
    if len(lines) < 3 or lines[1].strip() != DELIMITER:
        raise FormatVersionError(f"{kind} file has no header block")
    try:
        close = lines.index(DELIMITER, 2)
    except ValueError as e:
        raise FormatVersionError(f"{kind} header block is not closed") from e
    header = yaml.safe_load("\n".join(lines[2:close])) or {}

    body: list[str] = []
    footer: dict[str, Any] = {}
    rest = lines[close + 1 :]
    for i, line in enumerate(rest):
        if line.strip() == DELIMITER:
            tail = rest[i + 1 :]
            if not tail or tail[-1].strip() != DELIMITER:
                raise FormatVersionError(f"{kind} footer block is not closed")
            footer = yaml.safe_load("\n".join(tail[:-1])) or {}
            break
        if line.strip():
            body.append(line)

    rows = np.array([[float(v) for v in line.split()] for line in body], dtype=float)
    return Record(kind=kind, header=header, rows=rows, footer=footer)


def write_record(path: str | Path, record_text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record_text, encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def read_record(path: str | Path, kind: str) -> Record:
    return parse_record(Path(path).read_text(encoding="utf-8"), kind)


# Measures


def write_measure(path: str | Path, measure: EmpiricalMeasure, **metadata: Any) -> Path:
    """Rows are ``weight x1 .. xd``."""
    header = {"dim": measure.dim, "atoms": measure.size, **metadata}
    rows = (
        [w, *x] for w, x in zip(measure.weights, measure.positions)
    )
    return write_record(path, render_record("measure", header, rows))


def read_measure(path: str | Path) -> EmpiricalMeasure:
    record = read_record(path, "measure")
    dim = int(record.header["dim"])
    if record.rows.ndim != 2 or record.rows.shape[1] != dim + 1:
        raise FormatVersionError(f"Measure rows must have {dim + 1} columns")
    return EmpiricalMeasure.normalized(record.rows[:, 1:], record.rows[:, 0])


# Trajectory log


class TrajectoryLog:
    """Append-only ``time particle z1 .. zd`` log.

    Used as a context manager; the header is written on entry.
    """

    def __init__(self, path: str | Path, dim: int, **metadata: Any) -> None:
        self.path = Path(path)
        self.dim = dim
        self.metadata = metadata
        self._handle: TextIO | None = None
        self.rows_written = 0

    def __enter__(self) -> TrajectoryLog:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", encoding="utf-8")
        header = {"dim": self.dim, **self.metadata}
        self._handle.write(f"{tag_line('trajectory')}\n{DELIMITER}\n{dump_yaml(header)}{DELIMITER}\n")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def append(self, t: float, states: ArrayLike) -> None:
        """Append one row per particle of ``states`` (shape (N, d))."""
        if self._handle is None:
            raise RuntimeError("TrajectoryLog is not open")
        states = np.atleast_2d(np.asarray(states, dtype=float))
        time_text = format_number(t)
        for i, row in enumerate(states):
            self._handle.write(f"{time_text} {i} {' '.join(format_number(v) for v in row)}\n")
        self.rows_written += states.shape[0]


def read_trajectory(path: str | Path) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(times, states) with states of shape (T, N, d)."""
    record = read_record(path, "trajectory")
    dim = int(record.header["dim"])
    if record.rows.size == 0:
        return np.zeros(0), np.zeros((0, 0, dim))
    times, first = np.unique(record.rows[:, 0], return_index=True)
    particles = int(record.rows[:, 1].max()) + 1
    states = record.rows[:, 2:].reshape(times.size, particles, dim)
    return times[np.argsort(first)], states


# Campaigns


def write_campaign(path: str | Path, result: ExitCampaignResult) -> Path:
    """Header, ``sigma_index sigma time censored`` rows, footer with the fit."""
    rows = (
        [i, samples.sigma, t, bool(c)]
        for i, samples in enumerate(result.samples)
        for t, c in zip(samples.times, samples.censored)
    )
    footer = {"fit": None if result.fit is None else result.fit.to_dict()}
    return write_record(path, render_record("campaign", result.header(), rows, footer))


def read_campaign(path: str | Path) -> ExitCampaignResult:
    from sidlab.exits.campaign import ExitCampaignResult

    record = read_record(path, "campaign")
    header = record.header
    per_sigma = header.get("per_sigma", [])
    samples = []
    for i, sigma in enumerate(header["sigmas"]):
        rows = record.rows[record.rows[:, 0] == i] if record.rows.size else np.zeros((0, 4))
        info = per_sigma[i] if i < len(per_sigma) else {}
        samples.append(
            SigmaSamples(
                sigma=float(sigma),
                times=rows[:, 2],
                censored=rows[:, 3].astype(bool),
                horizon=float(info.get("horizon", math.inf)),
                dt=info.get("dt"),
            )
        )
    fit_data = record.footer.get("fit")
    return ExitCampaignResult(
        samples=samples,
        fit=None if fit_data is None else KramersFit.from_dict(fit_data),
        seed=int(header["seed"]),
        model_hash=str(header["model_hash"]),
        lam=np.asarray(header["lambda"], dtype=float),
        mode=header.get("mode", "tagged"),
        process=header.get("process", "interacting"),
        predicted_h=header.get("predicted_h"),
        reference_l=header.get("reference_l"),
        settings=header.get("settings", {}),
    )


# Plot data


def write_plot_data(
    path: str | Path,
    series: str,
    columns: Sequence[str],
    rows: ArrayLike,
    **metadata: Any,
) -> Path:
    """Numeric rows under a header naming the series and its columns."""
    data = np.atleast_2d(np.asarray(rows, dtype=float))
    if data.size and data.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} columns named but rows have {data.shape[1]}")
    header = {"series": series, "columns": list(columns), **metadata}
    return write_record(path, render_record("plot", header, data.tolist() if data.size else []))


def read_plot_data(path: str | Path) -> Record:
    return read_record(path, "plot")


# Manifest


def write_manifest(path: str | Path, manifest: dict[str, Any]) -> Path:
    """Pure YAML after the tag line."""
    return write_record(path, f"{tag_line('manifest')}\n{dump_yaml(manifest)}")


def read_manifest(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    first, _, rest = text.partition("\n")
    check_tag(first, "manifest")
    data = yaml.safe_load(rest) or {}
    if not isinstance(data, dict):
        raise FormatVersionError("Manifest body must be a mapping")
    return data


def sniff_kind(path: str | Path) -> str:
    """Kind named by the tag line of ``path``."""
    with open(path, encoding="utf-8") as f:
        line = f.readline().strip()
    if not line.startswith(TAG_PREFIX):
        raise FormatVersionError(f"{path} is not a sidlab result file")
    return line[len(TAG_PREFIX):].partition(" v")[0]
