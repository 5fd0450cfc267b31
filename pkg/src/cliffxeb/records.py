"""Result records: line-delimited JSON points, CSV and SVG export."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .engine import ExperimentConfig, XebPoint

CSV_COLUMNS = ("topology", "n", "p1", "p2", "m", "q_hat", "stderr", "circuits", "shots")
POINTS_FILE = "points.jsonl"
MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.json"


@dataclass(frozen=True)
class PointRecord:
    topology: str
    n: int
    p1: float
    p2: float
    m: int
    q_hat: float
    stderr: float
    circuits: int
    shots: int
    series: str = "noisy"

    @classmethod
    def from_point(cls, config: ExperimentConfig, point: XebPoint, ideal: bool = False) -> "PointRecord":
        p1, p2 = (0.0, 0.0) if ideal else (config.noise.p1, config.noise.p2)
        return cls(config.ensemble.topology, config.ensemble.n, p1, p2, point.m, point.q_hat,
                   point.stderr, point.circuits, point.shots, "ideal" if ideal else "noisy")

    def to_point(self) -> XebPoint:
        return XebPoint(self.m, self.q_hat, self.stderr, self.circuits, self.shots)

    def to_json(self) -> str:
        d = {k: getattr(self, k) for k in CSV_COLUMNS}
        d["series"] = self.series
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PointRecord":
        return cls(str(d["topology"]), int(d["n"]), float(d["p1"]), float(d["p2"]), int(d["m"]),
                   float(d["q_hat"]), float(d["stderr"]), int(d["circuits"]), int(d["shots"]),
                   str(d.get("series", "noisy")))


class PointStore:
    """Append-only ``points.jsonl``; each line is flushed and synced on write."""

    def __init__(self, path):
        self.path = Path(path)

    def load(self) -> list[PointRecord]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(PointRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError):
                    break  # a torn final line from an interrupted write
        return out

    def completed(self) -> set[tuple[int, str]]:
        return {(r.m, r.series) for r in self.load()}

    def append(self, record: PointRecord) -> None:
        self._truncate_torn_tail()
        with open(self.path, "a") as fh:
            fh.write(record.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _truncate_torn_tail(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            with open(self.path, "r+b") as fh:
                fh.truncate(data.rfind(b"\n") + 1)


def _records_from_csv(path) -> list[PointRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected CSV columns {','.join(CSV_COLUMNS)}")
        rows = [PointRecord.from_dict(row) for row in reader]
    # The CSV has no series column.  A noiseless twin is recognisable as the
    # zero-noise rows of a file that also holds noisy rows.
    if any(r.p1 or r.p2 for r in rows):
        rows = [replace(r, series="ideal") if not (r.p1 or r.p2) else r for r in rows]
    return rows


def load_records(path) -> list[PointRecord]:
    """Records from an output directory, a ``.jsonl`` file or an exported CSV."""
    path = Path(path)
    if path.is_dir():
        path = path / POINTS_FILE
        if not path.exists():
            return []  # an output directory before its first point
    if not path.exists():
        raise FileNotFoundError(f"no results at {path}")
    if path.suffix == ".csv":
        return _records_from_csv(path)
    return PointStore(path).load()


def series_key(r: PointRecord) -> tuple:
    return (r.topology, r.n, r.p1, r.p2, r.series)


def group_series(records) -> dict[tuple, list[PointRecord]]:
    groups: dict[tuple, list[PointRecord]] = {}
    for r in records:
        groups.setdefault(series_key(r), []).append(r)
    for v in groups.values():
        v.sort(key=lambda r: r.m)
    return groups


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c)
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def to_svg(records) -> str:
    """Semilog plot of q_hat against m, one series per noise setting."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "cliffxeb"
    fig, ax = plt.subplots(figsize=(6, 4))
    for (topology, n, p1, p2, series), rs in sorted(group_series(records).items()):
        pos = [r for r in rs if r.q_hat > 0]
        label = f"{topology} n={n} " + ("noiseless" if series == "ideal" else f"p1={p1:g} p2={p2:g}")
        ax.errorbar([r.m for r in pos], [r.q_hat for r in pos], yerr=[r.stderr for r in pos],
                    marker="o", ms=3, capsize=2, label=label)
    ax.axhline(1.0, color="k", lw=0.8, ls="--", label="XEB = 1")
    ax.set_yscale("log")
    ax.set_xlabel("cycles m")
    ax.set_ylabel("linear XEB")
    ax.legend(fontsize=7)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
