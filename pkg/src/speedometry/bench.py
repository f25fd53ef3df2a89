"""Batch evaluation over a dataset manifest and aggregate statistics.

A manifest line names one recorded pass:

    <camera>/<stream components>/<pass id>  <project path>  [gt mph]

e.g. ``Lorex/cam1/main/avi/T1P1  projects/lorex_cam1_T1P1.fsp``.  Pass ids
follow the T<x>P<y> convention: T1 passes are low perspective, T2 strong.
Ground truth defaults come from the bundled per-pass table (mph; overridable
per entry), and the report mirrors the usual summary layout: mean signed
error, exact / within-1 / within-2 mph buckets with counts and round-half-up
percentages, an uncertainty histogram in 1 mph bins, and the coverage rate.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import EmptyAggregate, IncompleteAnnotation, ParseError, SpeedometryError, UnknownPassId
from .model import load_project
from .speed import evaluate_project, mps_to_mph

# Per-pass GPS speeds (mph); identical for every camera that captured a pass.
DEFAULT_GT_MPH = {
    "T1P1": 29.0,
    "T1P2": 30.0,
    "T1P3": 30.0,
    "T1P4": 31.0,
    "T1P5": 30.0,
    "T1P6": 30.0,
    "T2P1": 30.0,
    "T2P2": 30.0,
    "T2P3": 30.0,
    "T2P4": 30.0,
    "T2P5": 30.0,
    "T2P6": 31.0,
    "T2P7": 30.0,
    "T2P8": 29.0,
}

_PASS_RE = re.compile(r"^T(\d+)P(\d+)$")


def perspective_of(pass_id: str) -> str:
    m = _PASS_RE.match(pass_id)
    if not m or m.group(1) not in ("1", "2"):
        raise UnknownPassId(pass_id)
    return "low" if m.group(1) == "1" else "strong"


@dataclass(frozen=True)
class ManifestEntry:
    camera: str
    stream: tuple[str, ...]
    pass_id: str
    project_path: str
    gt_mph: float

    @property
    def perspective(self) -> str:
        return perspective_of(self.pass_id)

    @property
    def source_label(self) -> str:
        return "/".join((self.camera, *self.stream, self.pass_id))


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    base_dir: Path


def load_gt_table(text: str) -> dict[str, float]:
    """``pass_id<TAB>mph`` lines; # comments and blanks ignored."""
    table = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"gt table line {lineno}: expected 'pass_id mph', got {line!r}")
        pass_id, mph = parts
        if not _PASS_RE.match(pass_id):
            raise UnknownPassId(pass_id)
        table[pass_id] = float(mph)
    return table


def parse_manifest(text: str, base_dir: Path, gt_table: Optional[dict[str, float]] = None) -> Manifest:
    gt = dict(DEFAULT_GT_MPH)
    if gt_table:
        gt.update(gt_table)
    entries = []
    seen_paths = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(
                f"manifest line {lineno}: expected '<source> <project> [gt_mph]', got {line!r}"
            )
        source, project_path = parts[0], parts[1]
        comps = source.split("/")
        if len(comps) < 2:
            raise ParseError(f"manifest line {lineno}: source needs '<camera>/.../<pass id>'")
        camera, pass_id = comps[0], comps[-1]
        if len(parts) == 3:
            gt_mph = float(parts[2])
        else:
            if pass_id not in gt:
                raise UnknownPassId(pass_id)
            gt_mph = gt[pass_id]
        perspective_of(pass_id)  # validates the id shape
        if gt_mph <= 0:
            raise ParseError(f"manifest line {lineno}: ground truth must be > 0 mph")
        if project_path in seen_paths:
            raise ParseError(f"manifest line {lineno}: duplicate project path {project_path!r}")
        seen_paths.add(project_path)
        entries.append(
            ManifestEntry(
                camera=camera,
                stream=tuple(comps[1:-1]),
                pass_id=pass_id,
                project_path=project_path,
                gt_mph=gt_mph,
            )
        )
    return Manifest(entries=tuple(entries), base_dir=base_dir)


def ingest_manifest(path: Path | str, gt_table_path: Path | str | None = None) -> Manifest:
    path = Path(path)
    gt_table = load_gt_table(Path(gt_table_path).read_text()) if gt_table_path else None
    return parse_manifest(path.read_text(), base_dir=path.parent, gt_table=gt_table)


@dataclass(frozen=True)
class EvalRecord:
    entry: ManifestEntry
    v_mph: Optional[float] = None
    delta_v_mph: Optional[float] = None
    signed_error_mph: Optional[float] = None
    covered: Optional[bool] = None
    excluded: Optional[str] = None


def _evaluate_entry(entry: ManifestEntry, base_dir: Path) -> EvalRecord:
    project_path = Path(entry.project_path)
    if not project_path.is_absolute():
        project_path = base_dir / project_path
    try:
        project = load_project(project_path)
        ev = evaluate_project(project, base_dir=project_path.parent)
    except IncompleteAnnotation as e:
        if any("grid" in piece for piece in e.missing):
            return EvalRecord(entry=entry, excluded="no rectification reference")
        return EvalRecord(entry=entry, excluded=str(e))
    except (SpeedometryError, OSError) as e:
        return EvalRecord(entry=entry, excluded=f"{type(e).__name__}: {e}")
    est = ev.estimate
    lo, hi = est.interval_mps
    v_mph = est.v_mph
    return EvalRecord(
        entry=entry,
        v_mph=v_mph,
        delta_v_mph=est.delta_v_mph,
        signed_error_mph=v_mph - entry.gt_mph,
        covered=bool(mps_to_mph(lo) <= entry.gt_mph <= mps_to_mph(hi)),
    )


def run_bench(manifest: Manifest) -> list[EvalRecord]:
    """One record per entry, manifest order; failures become exclusions."""
    return [_evaluate_entry(entry, manifest.base_dir) for entry in manifest.entries]


# ---------------------------------------------------------------------------
# Aggregation


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def percent_label(count: int, total: int) -> str:
    """Table-style cell: integer round-half-up percent with the raw count."""
    pct = round_half_up(100.0 * count / total)
    return f"{pct}% ({count})"


@dataclass(frozen=True)
class SplitStats:
    label: str
    n: int
    mean_signed_error_mph: float
    count_exact: int
    count_within_1: int
    count_within_2: int
    covered: int
    dv_histogram: tuple[int, ...]  # 1 mph bins starting at [0, 1)

    @property
    def coverage_rate(self) -> float:
        return self.covered / self.n


@dataclass(frozen=True)
class Report:
    splits: tuple[SplitStats, ...]  # all, low, strong (present splits only)
    n_excluded: int


def _split_stats(label: str, records: Sequence[EvalRecord]) -> SplitStats:
    n = len(records)
    errors = [r.signed_error_mph for r in records]
    exact = sum(1 for r in records if round_half_up(r.v_mph) == r.entry.gt_mph)
    within1 = sum(1 for e in errors if abs(e) <= 1.0)
    within2 = sum(1 for e in errors if abs(e) <= 2.0)
    covered = sum(1 for r in records if r.covered)
    dvs = [r.delta_v_mph for r in records]
    nbins = max(int(math.floor(dv)) for dv in dvs) + 1 if dvs else 0
    hist = [0] * nbins
    for dv in dvs:
        hist[int(math.floor(dv))] += 1
    return SplitStats(
        label=label,
        n=n,
        mean_signed_error_mph=sum(errors) / n,
        count_exact=exact,
        count_within_1=within1,
        count_within_2=within2,
        covered=covered,
        dv_histogram=tuple(hist),
    )


def aggregate(records: Sequence[EvalRecord]) -> Report:
    included = [r for r in records if r.excluded is None]
    if not included:
        raise EmptyAggregate("no evaluable records")
    splits = [_split_stats("all", included)]
    for label in ("low", "strong"):
        subset = [r for r in included if r.entry.perspective == label]
        if subset:
            splits.append(_split_stats(label, subset))
    return Report(splits=tuple(splits), n_excluded=len(records) - len(included))


def render_summary(report: Report) -> str:
    lines = [
        "perspective      n  exact spd    +/-1 mph     +/-2 mph    mean err  coverage",
    ]
    for s in report.splits:
        lines.append(
            f"{s.label:<12} {s.n:>5}  {percent_label(s.count_exact, s.n):<11}"
            f"  {percent_label(s.count_within_1, s.n):<11}"
            f"  {percent_label(s.count_within_2, s.n):<10}"
            f"  {s.mean_signed_error_mph:>+8.2f}"
            f"  {percent_label(s.covered, s.n)}"
        )
    if report.n_excluded:
        lines.append(f"excluded: {report.n_excluded}")
    return "\n".join(lines) + "\n"


def records_csv(records: Sequence[EvalRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [
            "camera",
            "stream",
            "pass_id",
            "perspective",
            "project",
            "gt_mph",
            "v_mph",
            "delta_v_mph",
            "signed_error_mph",
            "covered",
            "excluded",
        ]
    )
    for r in records:
        e = r.entry
        w.writerow(
            [
                e.camera,
                "/".join(e.stream),
                e.pass_id,
                e.perspective,
                e.project_path,
                e.gt_mph,
                "" if r.v_mph is None else repr(r.v_mph),
                "" if r.delta_v_mph is None else repr(r.delta_v_mph),
                "" if r.signed_error_mph is None else repr(r.signed_error_mph),
                "" if r.covered is None else str(r.covered).lower(),
                r.excluded or "",
            ]
        )
    return buf.getvalue()


def hist_csv(stats: SplitStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo_mph", "bin_hi_mph", "count"])
    for i, c in enumerate(stats.dv_histogram):
        w.writerow([i, i + 1, c])
    return buf.getvalue()


def hist_svg(stats: SplitStats, title: str) -> str:
    """Dependency-free bar chart of the delta_v histogram."""
    hist = stats.dv_histogram or (0,)
    peak = max(max(hist), 1)
    bar_w, chart_h, pad = 34, 160, 28
    width = pad * 2 + bar_w * len(hist)
    height = chart_h + pad * 2 + 16
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{pad}" y="{pad - 10}" font-size="12" font-family="sans-serif">{title}</text>',
    ]
    for i, c in enumerate(hist):
        h = chart_h * c / peak
        x = pad + i * bar_w
        y = pad + chart_h - h
        parts.append(
            f'<rect x="{x}" y="{y:.1f}" width="{bar_w - 4}" height="{h:.1f}" fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{x + (bar_w - 4) / 2}" y="{pad + chart_h + 14}" font-size="10" '
            f'font-family="sans-serif" text-anchor="middle">{i}-{i + 1}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(records: Sequence[EvalRecord], out_dir: Path | str, svg: bool = True) -> Report:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = aggregate(records)
    (out / "records.csv").write_text(records_csv(records))
    (out / "summary.txt").write_text(render_summary(report))
    for s in report.splits:
        if s.label == "all":
            continue
        (out / f"dv_hist_{s.label}.csv").write_text(hist_csv(s))
        if svg:
            (out / f"dv_hist_{s.label}.svg").write_text(
                hist_svg(s, f"delta_v histogram ({s.label} perspective, 1 mph bins)")
            )
    return report
