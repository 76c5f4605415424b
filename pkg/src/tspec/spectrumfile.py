"""Spectrum files: the JSON format the CLI writes, plus its CSV mirror.

Records hold one row per zero of D (the full symmetry orbit, so the set is
closed under k -> -k and k -> k*), sorted by index then |k|. The header embeds
a content hash over everything except the timestamp, so identical runs are
verifiable byte-for-byte up to `created`.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import List, Optional

from . import __version__
from .errors import ConfigError

_RECORD_FIELDS = ("index", "re_k", "im_k", "multiplicity", "residual", "cls", "branch")


@dataclass
class SpectrumRecord:
    index: Optional[int]
    re_k: float
    im_k: float
    multiplicity: int
    residual: float
    cls: str
    branch: Optional[int] = None

    @property
    def k(self) -> complex:
        return complex(self.re_k, self.im_k)


@dataclass
class SpectrumHeader:
    potential: dict
    variant: str
    region: list
    tolerances: dict
    s: int = 0
    warnings: List[str] = field(default_factory=list)
    tool_version: str = __version__
    created: str = ""
    potential_hash: str = ""
    content_hash: str = ""


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def potential_hash(potential: dict) -> str:
    return hashlib.sha256(_canonical(potential).encode()).hexdigest()[:16]


def _content_hash(header_dict: dict, records: List[dict]) -> str:
    body = {k: v for k, v in header_dict.items() if k not in ("created", "content_hash")}
    return hashlib.sha256(_canonical({"header": body, "records": records}).encode()).hexdigest()


def write_spectrum(path, header: SpectrumHeader, records: List[SpectrumRecord]) -> dict:
    """Serialize to JSON; returns the document written (for tests)."""
    records = sorted(records, key=lambda r: (
        r.index if r.index is not None else 10 ** 9,
        abs(r.k), r.re_k, r.im_k,
    ))
    header.potential_hash = potential_hash(header.potential)
    header.created = header.created or datetime.now(timezone.utc).isoformat()
    hdict = asdict(header)
    rdicts = [asdict(r) for r in records]
    hdict["content_hash"] = _content_hash(hdict, rdicts)
    doc = {"header": hdict, "records": rdicts}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return doc


def read_spectrum(path):
    """Read a spectrum file back losslessly; verifies the content hash."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        hdict = dict(doc["header"])
        rdicts = doc["records"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: not a spectrum file ({exc})") from None
    expected = hdict.get("content_hash", "")
    actual = _content_hash(hdict, rdicts)
    header = SpectrumHeader(**{k: v for k, v in hdict.items()})
    records = [SpectrumRecord(**{k: r.get(k) for k in _RECORD_FIELDS}) for r in rdicts]
    return header, records, expected == actual


def write_spectrum_csv(path, records: List[SpectrumRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RECORD_FIELDS)
        for r in records:
            writer.writerow([r.index, repr(r.re_k), repr(r.im_k), r.multiplicity,
                             repr(r.residual), r.cls, r.branch])
