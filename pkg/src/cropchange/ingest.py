"""CSV loaders: conflict events, reference samples, annotations, test points."""
from __future__ import annotations

import csv
import datetime as dt
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .geo import GeoPoint
from .sampling import STATUSES, Adjudication, Annotation, SampleRecord

log = logging.getLogger(__name__)

DEFAULT_EXCLUDE = ("Peaceful protest",)


@dataclass(frozen=True)
class ConflictEvent:
    date: dt.date
    event_type: str
    location: GeoPoint
    admin_zone: str | None = None
    sub_event_type: str | None = None


@dataclass
class EventLoad:
    events: list
    skipped: list = field(default_factory=list)  # (line number, reason)
    excluded: int = 0

    @property
    def tally(self):
        return Counter(e.event_type for e in self.events)

    def __len__(self):
        return len(self.events)


def _norm_type(s):
    s = " ".join(s.strip().lower().split())
    return s[:-1] if s.endswith("s") else s


def _columns(fieldnames, required, path):
    lookup = {name.strip().lower(): name for name in fieldnames or ()}
    missing = [c for c in required if c not in lookup]
    if missing:
        raise ValueError(f"{path}: missing required column(s) {', '.join(missing)}")
    return lookup


def load_events(path, exclude_types=DEFAULT_EXCLUDE, date_range=None):
    """Parse an ACLED-style CSV.

    An event is dropped when its ``event_type`` or ``sub_event_type`` matches
    an entry of ``exclude_types`` (case-insensitive, singular/plural folded).
    ``date_range`` is an inclusive ``(start, end)`` pair of dates. Malformed
    rows are skipped and listed in ``EventLoad.skipped`` with line numbers.
    """
    excluded_norm = {_norm_type(t) for t in exclude_types}
    if date_range is not None:
        date_range = tuple(d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d)) for d in date_range)
    out = EventLoad(events=[])
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = _columns(reader.fieldnames, ("event_date", "event_type", "latitude", "longitude"), path)
        sub_col = cols.get("sub_event_type")
        zone_col = cols.get("admin2") or cols.get("admin_zone")
        for row in reader:
            lineno = reader.line_num
            try:
                date = dt.date.fromisoformat(row[cols["event_date"]].strip())
                etype = row[cols["event_type"]].strip()
                if not etype:
                    raise ValueError("empty event_type")
                loc = GeoPoint(float(row[cols["longitude"]]), float(row[cols["latitude"]]))
            except (ValueError, TypeError, AttributeError) as exc:
                out.skipped.append((lineno, str(exc)))
                continue
            sub = row.get(sub_col).strip() if sub_col and row.get(sub_col) else None
            if _norm_type(etype) in excluded_norm or (sub and _norm_type(sub) in excluded_norm):
                out.excluded += 1
                continue
            if date_range is not None and not (date_range[0] <= date <= date_range[1]):
                continue
            zone = (row.get(zone_col) or "").strip() or None if zone_col else None
            out.events.append(ConflictEvent(date, etype, loc, zone, sub))
    if out.skipped:
        log.warning("%s: skipped %d malformed row(s)", path, len(out.skipped))
    return out


def events_per_zone(events, zones):
    """Events per named zone, in zone order, plus an ``unassigned`` bucket.

    ``zones`` maps name to a region with ``contains``; an event is credited
    to the first zone containing it.
    """
    counts = {name: 0 for name in zones}
    counts["unassigned"] = 0
    for e in events:
        for name, zone in zones.items():
            if zone.contains([e.location.lon], [e.location.lat])[0]:
                counts[name] += 1
                break
        else:
            counts["unassigned"] += 1
    return counts


# --- labels -------------------------------------------------------------------

_TRUE = {"1", "crop", "true", "yes", "y", "t"}
_FALSE = {"0", "noncrop", "non-crop", "false", "no", "n", "f"}


def parse_label(text, *, allow_missing=False):
    t = (text or "").strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    if allow_missing and t in ("", "na", "none", "null"):
        return None
    raise ValueError(f"unrecognized label {text!r}; expected crop or noncrop")


def _fmt_label(v):
    return "" if v is None else ("crop" if v else "noncrop")


SAMPLE_COLUMNS = ("id", "lon", "lat", "stratum", "ref_2020", "ref_2021", "consensus_status")


def load_samples(path):
    records = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = _columns(reader.fieldnames, ("id", "lon", "lat", "stratum"), path)
        seen = set()
        for row in reader:
            line = reader.line_num
            try:
                sid = int(row[cols["id"]])
                status = row[cols["consensus_status"]].strip() if "consensus_status" in cols else ""
                rec = SampleRecord(
                    id=sid,
                    location=GeoPoint(float(row[cols["lon"]]), float(row[cols["lat"]])),
                    stratum=int(row[cols["stratum"]]),
                    ref_2020=parse_label(row.get(cols.get("ref_2020", ""), ""), allow_missing=True),
                    ref_2021=parse_label(row.get(cols.get("ref_2021", ""), ""), allow_missing=True),
                    consensus_status=status or "unresolved",
                )
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
            if rec.consensus_status not in STATUSES:
                raise ValueError(f"{path}:{line}: unknown consensus_status {rec.consensus_status!r}")
            if sid in seen:
                raise ValueError(f"{path}:{line}: duplicate sample id {sid}")
            seen.add(sid)
            records.append(rec)
    return records


def write_samples(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for r in records:
            w.writerow([r.id, repr(float(r.lon)), repr(float(r.lat)), r.stratum,
                        _fmt_label(r.ref_2020), _fmt_label(r.ref_2021), r.consensus_status])


def _year(text):
    y = int(text)
    if y not in (2020, 2021):
        raise ValueError(f"year must be 2020 or 2021, got {y}")
    return y


def load_annotations(path):
    out = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = _columns(reader.fieldnames, ("sample_id", "annotator", "year", "label"), path)
        for row in reader:
            try:
                out.append(Annotation(
                    sample_id=int(row[cols["sample_id"]]),
                    annotator=row[cols["annotator"]].strip(),
                    year=_year(row[cols["year"]]),
                    label=parse_label(row[cols["label"]]),
                ))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def load_adjudications(path):
    out = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = _columns(reader.fieldnames, ("sample_id", "year", "label"), path)
        for row in reader:
            try:
                out.append(Adjudication(int(row[cols["sample_id"]]), _year(row[cols["year"]]),
                                        parse_label(row[cols["label"]])))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def load_labeled_points(path):
    """``lon,lat,label`` rows as ``(lon, lat, is_crop)`` tuples."""
    out = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = _columns(reader.fieldnames, ("lon", "lat", "label"), path)
        for row in reader:
            try:
                out.append((float(row[cols["lon"]]), float(row[cols["lat"]]), parse_label(row[cols["label"]])))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def write_events(events, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["event_date", "event_type", "sub_event_type", "latitude", "longitude", "admin_zone"])
        for e in events:
            w.writerow([e.date.isoformat(), e.event_type, e.sub_event_type or "",
                        repr(e.location.lat), repr(e.location.lon), e.admin_zone or ""])
