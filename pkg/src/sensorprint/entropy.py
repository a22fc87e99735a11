"""Identification power of Z-axis fingerprint populations.

Covers intra-device scatter percentiles, grid entropy of the (O_z, S_z)
scatter, grid-origin robustness, nearest-submission recognition with and
without User-Agent fusion, and the enrolled-fingerprint match rate used for
the M_Sz sweep.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from sensorprint.classify import ScaledDistanceConfig


@dataclass(frozen=True)
class Submission:
    cookie_id: str
    user_agent: str
    o_z: float
    s_z: float
    timestamp: float = 0.0
    group: int = 0  # independent population (replicate) the device belongs to

    def __post_init__(self):
        if not (math.isfinite(self.o_z) and math.isfinite(self.s_z)):
            raise ValueError(f"non-finite fingerprint in submission {self.cookie_id!r}")

    @property
    def point(self) -> tuple[float, float]:
        return (self.o_z, self.s_z)


@dataclass(frozen=True)
class GridSpec:
    """Cell widths default to the 95th-percentile intra-device distances."""

    width_o: float = 0.045
    width_s: float = 0.0037
    origin: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.width_o > 0 and self.width_s > 0):
            raise ValueError("grid cell widths must be positive")


@dataclass
class GridEntropyReport:
    counts: dict[tuple[int, int], int]
    probabilities: dict[tuple[int, int], float] = field(repr=False)
    entropy: float

    @property
    def occupied_cells(self) -> int:
        return len(self.counts)


def group_by_cookie(subs: Iterable[Submission]) -> dict[str, list[Submission]]:
    """Submissions per cookie, each list ordered by timestamp (stable)."""
    groups: dict[str, list[Submission]] = defaultdict(list)
    for s in subs:
        groups[s.cookie_id].append(s)
    return {k: sorted(v, key=lambda s: s.timestamp) for k, v in groups.items()}


def intra_device_distances(subs: Sequence[Submission]) -> tuple[list[float], list[float]]:
    """|dO_z| and |dS_z| between the two submissions of two-submission devices."""
    d_o, d_s = [], []
    for cookie, group in sorted(group_by_cookie(subs).items()):
        if len(group) == 2:
            a, b = group
            d_o.append(abs(b.o_z - a.o_z))
            d_s.append(abs(b.s_z - a.s_z))
    return d_o, d_s


def percentile_nearest_rank(values: Sequence[float], p: float) -> float:
    if len(values) == 0:
        raise ValueError("percentile of an empty list")
    if not 0 < p <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {p}")
    ordered = sorted(values)
    rank = math.ceil(p / 100 * len(ordered))
    return ordered[max(rank, 1) - 1]


def grid_cells(points, grid: GridSpec) -> np.ndarray:
    pts = np.asarray(points, float).reshape(-1, 2)
    origin = np.asarray(grid.origin if grid.origin is not None else pts.min(axis=0), float)
    widths = np.array([grid.width_o, grid.width_s])
    return np.floor((pts - origin) / widths).astype(np.int64)


def grid_entropy(points, grid: GridSpec = GridSpec()) -> GridEntropyReport:
    """Shannon entropy (bits) of cell occupancy on a regular 2-D grid.

    Cell index is ``floor((coord - origin) / width)`` per dimension; the
    origin defaults to the component-wise minimum of the points.
    """
    cells = grid_cells(points, grid)
    if len(cells) == 0:
        raise ValueError("grid entropy needs at least one point")
    counts = Counter(map(tuple, cells.tolist()))
    counts = {k: counts[k] for k in sorted(counts)}
    total = sum(counts.values())
    probs = {k: c / total for k, c in counts.items()}
    h = -sum(p * math.log2(p) for p in probs.values())
    return GridEntropyReport(counts, probs, h + 0.0)


def origin_sensitivity(points, widths: tuple[float, float] = (0.045, 0.0037),
                       offsets: Sequence[float | tuple[float, float]] = (0.0, 0.25, 0.5, 0.75)
                       ) -> tuple[float, float]:
    """Extremes of grid entropy over fractional shifts of the grid origin.

    Each offset (scalar for both axes, or a pair) moves the origin back from
    the component-wise minimum by that fraction of a cell width.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    base = pts.min(axis=0)
    w = np.asarray(widths, float)
    hs = []
    for off in offsets:
        frac = np.broadcast_to(np.asarray(off, float), (2,))
        origin = base - frac * w
        hs.append(grid_entropy(pts, GridSpec(w[0], w[1], tuple(origin))).entropy)
    return min(hs), max(hs)


# --------------------------------------------------------------------------
# recognition


@dataclass(frozen=True)
class RecognitionResult:
    correct: int
    total: int
    filtered_out: int = 0

    @property
    def rate(self) -> float:
        return self.correct / self.total if self.total else 0.0


def _filter_scattered(groups: dict[str, list[Submission]], percentile: float) -> set[str]:
    pairs = {k: g for k, g in groups.items() if len(g) == 2}
    d_o = [abs(g[1].o_z - g[0].o_z) for g in pairs.values()]
    d_s = [abs(g[1].s_z - g[0].s_z) for g in pairs.values()]
    lim_o = percentile_nearest_rank(d_o, percentile)
    lim_s = percentile_nearest_rank(d_s, percentile)
    return {k for k, g in pairs.items()
            if abs(g[1].o_z - g[0].o_z) > lim_o or abs(g[1].s_z - g[0].s_z) > lim_s}


def recognition_counts(subs: Sequence[Submission],
                       cfg: ScaledDistanceConfig = ScaledDistanceConfig(),
                       filter_percentile: float | None = None,
                       fuse_user_agent: bool = False) -> RecognitionResult:
    """Nearest-submission recognition over two-submission devices.

    The probe is each device's later submission; candidates are every other
    submission in the set (one-submission devices included). A probe is
    correct when its nearest candidate is the same device's first
    submission. Distance ties go to the lowest (cookie_id, timestamp).

    With ``filter_percentile``, two-submission devices whose |dO_z| or
    |dS_z| exceed that percentile are removed from the set entirely. With
    ``fuse_user_agent``, candidates must share the probe's User-Agent.
    """
    groups = group_by_cookie(subs)
    if not any(len(g) == 2 for g in groups.values()):
        raise ValueError("recognition needs at least one two-submission device")
    removed: set[str] = set()
    if filter_percentile is not None:
        removed = _filter_scattered(groups, filter_percentile)
        groups = {k: g for k, g in groups.items() if k not in removed}

    ordered = sorted((s for g in groups.values() for s in g),
                     key=lambda s: (s.cookie_id, s.timestamp))
    index = {id(s): i for i, s in enumerate(ordered)}  # also the tie-break rank
    o = np.array([s.o_z for s in ordered])
    sz = np.array([s.s_z for s in ordered])
    ua_codes = {ua: i for i, ua in enumerate(sorted({s.user_agent for s in ordered}))}
    ua = np.array([ua_codes[s.user_agent] for s in ordered])

    correct = total = 0
    for cookie in sorted(groups):
        g = groups[cookie]
        if len(g) != 2:
            continue
        total += 1
        first, probe = index[id(g[0])], index[id(g[1])]
        d = (o - o[probe]) ** 2 + cfg.m_sz * (sz - sz[probe]) ** 2
        d[probe] = np.inf
        if fuse_user_agent:
            d[ua != ua[probe]] = np.inf
        # argmin returns the first minimum, i.e. the lowest rank among ties
        correct += int(np.argmin(d)) == first
    return RecognitionResult(correct, total, len(removed))


def recognition_rate(subs: Sequence[Submission],
                     cfg: ScaledDistanceConfig = ScaledDistanceConfig(),
                     filter_percentile: float | None = None) -> float:
    return recognition_counts(subs, cfg, filter_percentile).rate


def ua_fused_recognition(subs: Sequence[Submission],
                         cfg: ScaledDistanceConfig = ScaledDistanceConfig(),
                         filter_percentile: float | None = None) -> float:
    return recognition_counts(subs, cfg, filter_percentile, fuse_user_agent=True).rate


def ua_only_identified(subs: Sequence[Submission]) -> int:
    """Two-submission devices whose User-Agent no other device shares."""
    groups = group_by_cookie(subs)
    owners: dict[str, set[str]] = defaultdict(set)
    for cookie, g in groups.items():
        for s in g:
            owners[s.user_agent].add(cookie)
    return sum(1 for cookie, g in groups.items()
               if len(g) == 2 and all(owners[s.user_agent] == {cookie} for s in g))


def enrolled_match_rate(subs: Sequence[Submission],
                        cfg: ScaledDistanceConfig = ScaledDistanceConfig()) -> float:
    """Fraction of devices whose second submission is nearest to their own first.

    Only first submissions are enrolled; every device with at least two
    submissions contributes one probe. Ties go to the lowest cookie id.
    """
    groups = group_by_cookie(subs)
    cookies = sorted(k for k, g in groups.items() if len(g) >= 2)
    if not cookies:
        raise ValueError("need at least one device with two submissions")
    o = np.array([groups[k][0].o_z for k in cookies])
    sz = np.array([groups[k][0].s_z for k in cookies])
    hits = 0
    for i, k in enumerate(cookies):
        probe = groups[k][1]
        d = (o - probe.o_z) ** 2 + cfg.m_sz * (sz - probe.s_z) ** 2
        hits += int(np.argmin(d)) == i
    return hits / len(cookies)


def msz_sweep(subs: Sequence[Submission], values: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(m), enrolled_match_rate(subs, ScaledDistanceConfig(m))) for m in values]


def enrolled_match_intervals(subs: Sequence[Submission]) -> list[tuple[float, float]]:
    """Open M_Sz interval on which each probe matches its own enrolled point.

    For a probe with squared offsets ``a`` and squared sensitivity gaps ``b``
    to the enrolled points, the own point ``i`` wins against ``j`` iff
    ``a_i + M b_i < a_j + M b_j``, a half-line in M. The intersection over
    all ``j`` (and M >= 0) is returned; empty intervals have lo >= hi.
    """
    groups = group_by_cookie(subs)
    cookies = sorted(k for k, g in groups.items() if len(g) >= 2)
    o = np.array([groups[k][0].o_z for k in cookies])
    sz = np.array([groups[k][0].s_z for k in cookies])
    out = []
    for i, k in enumerate(cookies):
        probe = groups[k][1]
        a = (o - probe.o_z) ** 2
        b = (sz - probe.s_z) ** 2
        da = np.delete(a, i) - a[i]
        db = b[i] - np.delete(b, i)
        lo, hi = 0.0, math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = da / db
        if (db > 0).any():
            hi = float(bound[db > 0].min())
        if (db < 0).any():
            lo = max(lo, float(bound[db < 0].max()))
        if np.any((db == 0) & (da <= 0)):
            lo, hi = 0.0, 0.0
        out.append((lo, hi))
    return out


def msz_plateaus(intervals: Sequence[tuple[float, float]]) -> tuple[int, list[tuple[float, float]]]:
    """Maximum number of simultaneously matched probes and the M ranges achieving it.

    Adjacent maximal pieces are merged; each returned range is open.
    """
    events = sorted({x for lo, hi in intervals if lo < hi for x in (lo, hi)} | {0.0})
    edges = events + [math.inf]
    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        if lo == hi:
            continue
        mid = (lo + hi) / 2 if math.isfinite(hi) else lo + 1.0
        pieces.append((lo, hi, sum(a < mid < b for a, b in intervals)))
    best = max(c for *_, c in pieces)
    ranges: list[tuple[float, float]] = []
    for lo, hi, c in pieces:
        if c != best:
            continue
        if ranges and ranges[-1][1] == lo:
            ranges[-1] = (ranges[-1][0], hi)
        else:
            ranges.append((lo, hi))
    return best, ranges
