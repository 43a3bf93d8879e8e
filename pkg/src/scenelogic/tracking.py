"""Instance tracking across a window by weighted bipartite matching.

Edge weights blend two box overlaps: the raw IoU and the IoU after carrying
the earlier box along its optical flow.  Short occlusions are bridged with
hypothetical observations extrapolated at constant velocity.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .scene import ObjectObservation, SceneWindow


class CategoryMismatch(ValueError):
    pass


class MissingGroundTruthIds(ValueError):
    pass


@dataclass(frozen=True)
class TrackerConfig:
    alpha: float = 0.5  # weight on the flow-carried IoU factor
    w_min: float = 0.1  # edges below this weight are not matchable
    max_gap: int = 2  # occlusion frames bridged by hypothetical vertices


def iou(a, b) -> float:
    """Intersection over union of two (x0, y0, x1, y1) boxes."""
    ix0 = max(a[0], b[0])
    iy0 = max(a[1], b[1])
    ix1 = min(a[2], b[2])
    iy1 = min(a[3], b[3])
    iw = max(0.0, ix1 - ix0)
    ih = max(0.0, iy1 - iy0)
    inter = iw * ih
    if inter <= 0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _shift(bbox, d):
    return (bbox[0] + d[0], bbox[1] + d[1], bbox[2] + d[0], bbox[3] + d[1])


def edge_weight(l: ObjectObservation, r: ObjectObservation,
                alpha: float = TrackerConfig.alpha) -> float:
    """Association weight in [0, 1] between observations of adjacent frames."""
    if l.category != r.category:
        raise CategoryMismatch(f"{l.category} vs {r.category}")
    raw = iou(l.bbox, r.bbox)
    if l.flow_px is None:
        flow = raw
    else:
        flow = iou(_shift(l.bbox, l.flow_px), r.bbox)
    return alpha * flow + (1.0 - alpha) * raw


@dataclass(frozen=True)
class AssociationGraph:
    left: tuple[ObjectObservation, ...]
    right: tuple[ObjectObservation, ...]
    edges: tuple[tuple[int, int, float], ...]
    skip_cost: float = TrackerConfig.w_min


def build_graph(left, right, alpha: float = TrackerConfig.alpha,
                w_min: float = TrackerConfig.w_min) -> AssociationGraph:
    """Dense edges between same-category observations of two frames."""
    edges = []
    for i, l in enumerate(left):
        for j, r in enumerate(right):
            if l.category == r.category:
                edges.append((i, j, edge_weight(l, r, alpha)))
    return AssociationGraph(tuple(left), tuple(right), tuple(edges), w_min)


@dataclass(frozen=True)
class MatchResult:
    assignments: tuple[tuple[int, int, float], ...]
    unmatched_left: tuple[int, ...]
    unmatched_right: tuple[int, ...]


def match_frames(g: AssociationGraph) -> MatchResult:
    """Maximum-weight assignment over the graph; pairs below the weight floor
    stay unmatched."""
    nl, nr = len(g.left), len(g.right)
    if nl == 0 or nr == 0:
        return MatchResult((), tuple(range(nl)), tuple(range(nr)))
    w = np.zeros((nl, nr))
    for i, j, weight in g.edges:
        w[i, j] = weight
    rows, cols = linear_sum_assignment(w, maximize=True)
    assignments = []
    matched_l, matched_r = set(), set()
    for i, j in zip(rows, cols):
        if w[i, j] >= g.skip_cost:
            assignments.append((int(i), int(j), float(w[i, j])))
            matched_l.add(int(i))
            matched_r.add(int(j))
    return MatchResult(
        tuple(assignments),
        tuple(i for i in range(nl) if i not in matched_l),
        tuple(j for j in range(nr) if j not in matched_r),
    )


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """One instance's observations within a window, keyed by window-relative
    frame position.  Occlusion gaps appear as missing keys."""

    instance_id: str
    category: str
    observations: dict[int, ObjectObservation]
    attributes: dict = field(default_factory=dict)

    @property
    def first_frame(self) -> int:
        return min(self.observations)

    @property
    def last_frame(self) -> int:
        return max(self.observations)

    def frames_sorted(self) -> list[tuple[int, ObjectObservation]]:
        return sorted(self.observations.items())


@dataclass(frozen=True)
class PresenceFlags:
    appears: bool
    disappears: bool
    first_frame: int
    last_frame: int


def presence(t: Trajectory, n: int) -> PresenceFlags:
    first, last = t.first_frame, t.last_frame
    return PresenceFlags(first > 0, last < n - 1, first, last)


def _consolidate_attributes(observations) -> dict:
    votes: dict[str, Counter] = {}
    order: dict[str, dict] = {}
    for _, obs in sorted(observations.items()):
        for key, value in (obs.attributes or {}).items():
            votes.setdefault(key, Counter())[value] += 1
            order.setdefault(key, {}).setdefault(value, len(order.get(key, {})))
    out = {}
    for key, counter in votes.items():
        best = max(counter, key=lambda v: (counter[v], -order[key][v]))
        out[key] = best
    return out


def _assign_ids(tracks: list[Trajectory]) -> list[Trajectory]:
    """Deterministic instance ids: category plus ordinal by first appearance,
    leftmost centroid breaking ties."""
    def sort_key(t: Trajectory):
        first = t.first_frame
        obs = t.observations[first]
        return (first, obs.centroid_px[0], obs.centroid_px[1])

    by_cat: dict[str, list[Trajectory]] = {}
    for t in tracks:
        by_cat.setdefault(t.category, []).append(t)
    out = []
    for cat in sorted(by_cat):
        for i, t in enumerate(sorted(by_cat[cat], key=sort_key)):
            t.instance_id = f"{cat.lower()}{i + 1:02d}"
            out.append(t)
    out.sort(key=lambda t: t.instance_id)
    return out


def _link_oracle(w: SceneWindow) -> list[Trajectory]:
    groups: dict[str, dict[int, ObjectObservation]] = {}
    categories: dict[str, str] = {}
    for pos, frame in enumerate(w.frames):
        for obs in frame.objects:
            if not obs.gt_instance:
                raise MissingGroundTruthIds(
                    f"frame {frame.frame_index} has an object without gt_instance"
                )
            groups.setdefault(obs.gt_instance, {})[pos] = obs
            prev = categories.setdefault(obs.gt_instance, obs.category)
            if prev != obs.category:
                raise CategoryMismatch(
                    f"{obs.gt_instance}: {prev} vs {obs.category} across frames"
                )
    tracks = [
        Trajectory(gid, categories[gid], obs_map, _consolidate_attributes(obs_map))
        for gid, obs_map in groups.items()
    ]
    tracks.sort(key=lambda t: t.instance_id)
    return tracks


class _LiveTrack:
    __slots__ = ("observations", "category", "repr_obs", "misses", "depth_step")

    def __init__(self, pos: int, obs: ObjectObservation):
        self.observations = {pos: obs}
        self.category = obs.category
        self.repr_obs = obs
        self.misses = 0
        self.depth_step = 0.0

    def step_estimate(self) -> tuple[float, float]:
        if self.repr_obs.flow_px is not None:
            return self.repr_obs.flow_px
        keys = sorted(self.observations)
        if len(keys) >= 2:
            a = self.observations[keys[-2]].centroid_px
            b = self.observations[keys[-1]].centroid_px
            return (b[0] - a[0], b[1] - a[1])
        return (0.0, 0.0)

    def record(self, pos: int, obs: ObjectObservation):
        prev_depth = self.repr_obs.depth_m
        self.observations[pos] = obs
        self.depth_step = obs.depth_m - prev_depth
        self.repr_obs = obs
        self.misses = 0

    def ghost(self):
        """Hypothetical observation continuing the track at constant velocity."""
        d = self.step_estimate()
        self.misses += 1
        self.repr_obs = replace(
            self.repr_obs,
            centroid_px=(self.repr_obs.centroid_px[0] + d[0],
                         self.repr_obs.centroid_px[1] + d[1]),
            bbox=_shift(self.repr_obs.bbox, d),
            depth_m=max(1e-3, self.repr_obs.depth_m + self.depth_step),
        )


def _link_inferred(w: SceneWindow, cfg: TrackerConfig) -> list[Trajectory]:
    live: list[_LiveTrack] = []
    done: list[_LiveTrack] = []
    for obs in w.frames[0].objects:
        live.append(_LiveTrack(0, obs))

    for pos in range(1, w.n):
        objects = w.frames[pos].objects
        g = build_graph([t.repr_obs for t in live], objects, cfg.alpha, cfg.w_min)
        result = match_frames(g)
        for i, j, _ in result.assignments:
            live[i].record(pos, objects[j])
        survivors = []
        for i in result.unmatched_left:
            t = live[i]
            if t.misses + 1 > cfg.max_gap or pos == w.n - 1:
                done.append(t)
            else:
                t.ghost()
                survivors.append(t)
        live = [live[i] for i, _, _ in result.assignments] + survivors
        for j in result.unmatched_right:
            live.append(_LiveTrack(pos, objects[j]))
    done.extend(live)

    tracks = [
        Trajectory("", t.category, t.observations,
                   _consolidate_attributes(t.observations))
        for t in done
    ]
    return _assign_ids(tracks)


def link_window(w: SceneWindow, mode: str = "inferred",
                cfg: TrackerConfig = TrackerConfig()) -> list[Trajectory]:
    """Group the window's observations into instance trajectories.

    ``oracle`` trusts gt_instance labels; ``inferred`` chains frame-pair
    matchings, bridging up to ``cfg.max_gap`` occluded frames per track.
    """
    if mode == "oracle":
        return _link_oracle(w)
    if mode == "inferred":
        return _link_inferred(w, cfg)
    raise ValueError(f"unknown tracking mode {mode!r}")
