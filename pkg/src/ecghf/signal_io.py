"""Loading of raw 8-channel ECG recordings, lead derivation and fragment cutting.

Record files are plain-text CSV, UTF-8, LF line endings: comment lines of the
form ``# key=value`` (``rate`` is required, ``subject`` and ``label`` are
optional), then a header row naming the channels L, F, C1..C6 in any order,
then one row of millivolt samples per time step.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DomainError, InsufficientDataError

CHANNEL_NAMES = ("L", "F", "C1", "C2", "C3", "C4", "C5", "C6")

LEAD_ORDER = ("I", "II", "III", "aVR", "aVL", "aVF",
              "V1", "V2", "V3", "V4", "V5", "V6")

GROUP_LABELS = ("healthy", "sick", "unlabeled")


def _as_float_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise DomainError(f"expected a 1-d sample sequence, got shape {a.shape}")
    return a


@dataclass
class EcgRecord:
    """Raw 8-channel recording: channel name -> millivolt samples."""

    channels: dict
    sampling_rate: int
    subject_id: str = ""
    group_label: str = "unlabeled"

    def __post_init__(self):
        got = set(self.channels)
        want = set(CHANNEL_NAMES)
        missing = sorted(want - got)
        extra = sorted(got - want)
        if missing:
            raise DataFormatError(f"missing channel {missing[0]}")
        if extra:
            raise DataFormatError(f"unexpected channel {extra[0]}")
        self.channels = {name: _as_float_array(self.channels[name])
                         for name in CHANNEL_NAMES}
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise DataFormatError(
                f"channel length mismatch: {sorted(len(v) for v in self.channels.values())}")
        if lengths == {0}:
            raise DataFormatError("record has no samples")
        if int(self.sampling_rate) != self.sampling_rate or self.sampling_rate <= 0:
            raise DataFormatError(f"sampling rate must be a positive integer, got {self.sampling_rate}")
        self.sampling_rate = int(self.sampling_rate)
        if self.group_label not in GROUP_LABELS:
            raise DataFormatError(f"unknown group label {self.group_label!r}")

    @property
    def n_samples(self) -> int:
        return len(self.channels["L"])


@dataclass
class LeadSet:
    """The 12 standard leads derived from one record."""

    leads: dict
    sampling_rate: int
    subject_id: str = ""
    group_label: str = "unlabeled"

    def __post_init__(self):
        if set(self.leads) != set(LEAD_ORDER):
            raise DataFormatError("lead set must contain exactly the 12 standard leads")

    @property
    def n_samples(self) -> int:
        return len(self.leads["I"])


@dataclass
class Fragment:
    """A fixed-length cut of one lead, the unit of feature extraction."""

    samples: np.ndarray
    sampling_rate: int
    lead_name: str
    subject_id: str = ""
    fragment_index: int = 0
    group_label: str = "unlabeled"

    def __post_init__(self):
        self.samples = _as_float_array(self.samples)


def load_record(path, fmt: str = "csv") -> EcgRecord:
    """Parse a record file into an :class:`EcgRecord`.

    Only the CSV format described in the module docstring is supported.
    """
    if fmt != "csv":
        raise DataFormatError(f"unsupported record format {fmt!r}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except FileNotFoundError:
        raise
    meta = {}
    header = None
    columns: list[list[float]] = []
    n_cols = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            if len(set(header)) != len(header):
                raise DataFormatError("duplicate channel in header")
            n_cols = len(header)
            columns = [[] for _ in range(n_cols)]
            continue
        if len(cells) != n_cols:
            raise DataFormatError(
                f"row at line {lineno}: length mismatch, expected {n_cols} values, got {len(cells)}")
        for j, cell in enumerate(cells):
            try:
                columns[j].append(float(cell))
            except ValueError:
                raise DataFormatError(f"row at line {lineno}: could not parse {cell!r}") from None
    if header is None:
        raise DataFormatError("file has no header row")
    if "rate" not in meta:
        raise DataFormatError("missing '# rate=<int>' line")
    try:
        rate = int(meta["rate"])
    except ValueError:
        raise DataFormatError(f"invalid sampling rate {meta['rate']!r}") from None
    subject = meta.get("subject", os.path.splitext(os.path.basename(str(path)))[0])
    label = meta.get("label", "unlabeled")
    channels = {name: np.array(col) for name, col in zip(header, columns)}
    return EcgRecord(channels=channels, sampling_rate=rate,
                     subject_id=subject, group_label=label)


def write_record(record: EcgRecord, path) -> None:
    """Write a record in the documented CSV format (atomic replace)."""
    out = [f"# rate={record.sampling_rate}",
           f"# subject={record.subject_id}",
           f"# label={record.group_label}",
           ",".join(CHANNEL_NAMES)]
    data = np.column_stack([record.channels[name] for name in CHANNEL_NAMES])
    for row in data:
        out.append(",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(out) + "\n")


def derive_leads(record: EcgRecord) -> LeadSet:
    """Compute the 12 standard leads from the 8 recorded channels.

    I=L, II=F, III=F-L, aVR=-(L+F)/2, aVL=L-F/2, aVF=F-L/2, Vi=Ci-(L+F)/3.
    """
    L = record.channels["L"]
    F = record.channels["F"]
    leads = {
        "I": L.copy(),
        "II": F.copy(),
        "III": F - L,
        "aVR": -(L + F) / 2.0,
        "aVL": L - F / 2.0,
        "aVF": F - L / 2.0,
    }
    for i in range(1, 7):
        leads[f"V{i}"] = record.channels[f"C{i}"] - (L + F) / 3.0
    return LeadSet(leads=leads, sampling_rate=record.sampling_rate,
                   subject_id=record.subject_id, group_label=record.group_label)


def fragment_length(duration_s: float, sampling_rate: int) -> int:
    """Samples per fragment; rejects non-integer duration*rate instead of rounding."""
    exact = duration_s * sampling_rate
    n = round(exact)
    if n <= 0:
        raise DomainError(f"fragment duration {duration_s} s is too short at {sampling_rate} Hz")
    if abs(exact - n) > 1e-9 * max(1.0, abs(exact)):
        raise DomainError(
            f"duration {duration_s} s times rate {sampling_rate} Hz is not a whole number of samples")
    return n


def extract_fragments(leads: LeadSet, duration_s: float, count: int) -> list:
    """Cut `count` consecutive non-overlapping fragments per lead, from sample 0."""
    if count < 0:
        raise DomainError(f"fragment count must be >= 0, got {count}")
    if count == 0:
        return []
    n = fragment_length(duration_s, leads.sampling_rate)
    needed = n * count
    available = leads.n_samples
    if needed > available:
        raise InsufficientDataError(
            f"record too short: need {needed} samples for {count} x {duration_s} s, "
            f"have {available}")
    fragments = []
    for lead in LEAD_ORDER:
        samples = leads.leads[lead]
        for k in range(count):
            fragments.append(Fragment(
                samples=samples[k * n:(k + 1) * n].copy(),
                sampling_rate=leads.sampling_rate,
                lead_name=lead,
                subject_id=leads.subject_id,
                fragment_index=k,
                group_label=leads.group_label,
            ))
    return fragments


def write_fragment_manifest(fragments, path) -> None:
    """CSV manifest: subject_id, lead, fragment_index, start_sample, length."""
    rows = ["subject_id,lead,fragment_index,start_sample,length"]
    for frag in fragments:
        start = frag.fragment_index * len(frag.samples)
        rows.append(f"{frag.subject_id},{frag.lead_name},{frag.fragment_index},"
                    f"{start},{len(frag.samples)}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def atomic_write_text(path, text: str) -> None:
    """Whole-file atomic write: temp file in the target directory, then rename."""
    path = str(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
