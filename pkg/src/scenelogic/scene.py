"""Scene annotations and sliding windows.

The annotation file is a JSON document per sequence:

    {"intrinsics": {"fx", "fy", "cx", "cy", "fps"},
     "frames": [{"index": int,
                 "objects": [{"category", "gt_instance"?, "centroid_px",
                              "bbox", "depth_m", "flow_px"?, "attributes"?}]}]}

Pixels and meters only.  A window is N consecutive frames plus the chain of
frame-pair transforms that pins every frame to the shared temporary origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .geometry import (
    CameraIntrinsics,
    InsufficientAnchors,
    Transform2,
    back_project,
    estimate_origin,
    to_bev,
)

DEFAULT_WINDOW = 10

# Categories whose instances anchor the temporary origin.
STATIC_CATEGORIES = frozenset({
    "Road", "LaneMarking", "TrafficSign", "Sidewalk", "Fence",
    "Pole", "Wall", "Building", "Vegetation",
})

# Surfaces that can carry other objects for On(x, y).
SURFACE_CATEGORIES = frozenset({"Road", "Sidewalk", "LaneMarking"})


@dataclass(frozen=True)
class ObjectObservation:
    category: str
    centroid_px: tuple[float, float]
    bbox: tuple[float, float, float, float]
    depth_m: float
    gt_instance: str | None = None
    flow_px: tuple[float, float] | None = None
    attributes: dict | None = None

    def __post_init__(self):
        if self.depth_m <= 0:
            raise ValueError(f"depth must be positive, got {self.depth_m}")
        x0, y0, x1, y1 = self.bbox
        cx, cy = self.centroid_px
        if not (x0 <= cx <= x1 and y0 <= cy <= y1):
            raise ValueError("bbox must contain the centroid")


@dataclass(frozen=True)
class FrameObservation:
    frame_index: int
    objects: tuple[ObjectObservation, ...]


@dataclass(frozen=True)
class Sequence:
    intrinsics: CameraIntrinsics
    frames: tuple[FrameObservation, ...]

    def __post_init__(self):
        for a, b in zip(self.frames, self.frames[1:]):
            if b.frame_index != a.frame_index + 1:
                raise ValueError("frame indices must be consecutive")


@dataclass(frozen=True)
class SceneWindow:
    frames: tuple[FrameObservation, ...]
    intrinsics: CameraIntrinsics
    window_id: int
    origin_chain: tuple[Transform2, ...]

    def __post_init__(self):
        if len(self.origin_chain) != len(self.frames) - 1:
            raise ValueError("origin chain must have one transform per frame pair")

    @property
    def n(self) -> int:
        return len(self.frames)

    def cumulative(self) -> tuple[Transform2, ...]:
        """Transform mapping each frame's coordinates into frame 0's."""
        cache = self.__dict__.get("_cumulative")
        if cache is None:
            cums = [Transform2.identity()]
            for link in self.origin_chain:
                cums.append(cums[-1].compose(link))
            cache = tuple(cums)
            self.__dict__["_cumulative"] = cache
        return cache

    def to_window_frame(self, frame_pos: int, point) -> tuple[float, float]:
        """Map a BEV point of frame ``frame_pos`` (window-relative) into the
        window's common origin (frame 0 coordinates)."""
        return self.cumulative()[frame_pos].transform(point)


def bev_of(obs: ObjectObservation, k: CameraIntrinsics) -> tuple[float, float]:
    return to_bev(back_project(obs.centroid_px, obs.depth_m, k))


# ---------------------------------------------------------------------------
# Origin chain construction
# ---------------------------------------------------------------------------

def _static_correspondences(prev: FrameObservation, curr: FrameObservation,
                            k: CameraIntrinsics, nn_gate_m: float):
    """Pair static-object BEV positions across a frame pair.

    Ground-truth instance labels pair directly; the rest pair to the nearest
    unclaimed neighbor within the gate.
    """
    prev_static = [o for o in prev.objects if o.category in STATIC_CATEGORIES]
    curr_static = [o for o in curr.objects if o.category in STATIC_CATEGORIES]
    prev_pts = [bev_of(o, k) for o in prev_static]
    curr_pts = [bev_of(o, k) for o in curr_static]

    pairs: list[tuple[tuple[float, float], tuple[float, float]]] = []
    used_curr: set[int] = set()

    by_id = {o.gt_instance: j for j, o in enumerate(curr_static) if o.gt_instance}
    remaining_prev = []
    for i, o in enumerate(prev_static):
        j = by_id.get(o.gt_instance) if o.gt_instance else None
        if j is not None and curr_static[j].category == o.category:
            pairs.append((prev_pts[i], curr_pts[j]))
            used_curr.add(j)
        else:
            remaining_prev.append(i)

    for i in remaining_prev:
        best, best_d = None, nn_gate_m
        for j in range(len(curr_static)):
            if j in used_curr or curr_static[j].category != prev_static[i].category:
                continue
            d = math.dist(prev_pts[i], curr_pts[j])
            if d <= best_d:
                best, best_d = j, d
        if best is not None:
            used_curr.add(best)
            pairs.append((prev_pts[i], curr_pts[best]))

    return pairs


def build_window(frames, intrinsics: CameraIntrinsics, window_id: int = 0,
                 translation_only: bool = False, nn_gate_m: float = 1.0) -> SceneWindow:
    """Assemble a SceneWindow, estimating the frame-pair origin transforms
    from static-object correspondences."""
    frames = tuple(frames)
    chain = []
    for prev, curr in zip(frames, frames[1:]):
        pairs = _static_correspondences(prev, curr, intrinsics, nn_gate_m)
        if len(pairs) < 2:
            raise InsufficientAnchors(
                f"frames {prev.frame_index}-{curr.frame_index}: "
                f"{len(pairs)} static correspondences, need 2"
            )
        prev_pts = [p for p, _ in pairs]
        curr_pts = [c for _, c in pairs]
        chain.append(estimate_origin(prev_pts, curr_pts, translation_only))
    return SceneWindow(frames, intrinsics, window_id, tuple(chain))


def windows(seq: Sequence, n: int = DEFAULT_WINDOW, **kwargs) -> list[SceneWindow]:
    """All sliding windows of length n, advancing one frame at a time."""
    if len(seq.frames) < n:
        raise ValueError(f"sequence has {len(seq.frames)} frames, window needs {n}")
    return [
        build_window(seq.frames[i:i + n], seq.intrinsics, window_id=i, **kwargs)
        for i in range(len(seq.frames) - n + 1)
    ]


# ---------------------------------------------------------------------------
# JSON ingest / export
# ---------------------------------------------------------------------------

def _obs_from_dict(d: dict) -> ObjectObservation:
    return ObjectObservation(
        category=d["category"],
        centroid_px=tuple(d["centroid_px"]),
        bbox=tuple(d["bbox"]),
        depth_m=float(d["depth_m"]),
        gt_instance=d.get("gt_instance"),
        flow_px=tuple(d["flow_px"]) if d.get("flow_px") is not None else None,
        attributes=d.get("attributes"),
    )


def _obs_to_dict(o: ObjectObservation) -> dict:
    d = {
        "category": o.category,
        "centroid_px": list(o.centroid_px),
        "bbox": list(o.bbox),
        "depth_m": o.depth_m,
    }
    if o.gt_instance is not None:
        d["gt_instance"] = o.gt_instance
    if o.flow_px is not None:
        d["flow_px"] = list(o.flow_px)
    if o.attributes is not None:
        d["attributes"] = dict(o.attributes)
    return d


def sequence_from_dict(doc: dict) -> Sequence:
    k = doc["intrinsics"]
    intr = CameraIntrinsics(float(k["fx"]), float(k["fy"]),
                            float(k["cx"]), float(k["cy"]), float(k["fps"]))
    frames = tuple(
        FrameObservation(int(f["index"]),
                         tuple(_obs_from_dict(o) for o in f["objects"]))
        for f in doc["frames"]
    )
    return Sequence(intr, frames)


def sequence_to_dict(seq: Sequence) -> dict:
    return {
        "intrinsics": {
            "fx": seq.intrinsics.fx, "fy": seq.intrinsics.fy,
            "cx": seq.intrinsics.cx, "cy": seq.intrinsics.cy,
            "fps": seq.intrinsics.fps,
        },
        "frames": [
            {"index": f.frame_index, "objects": [_obs_to_dict(o) for o in f.objects]}
            for f in seq.frames
        ],
    }


def load_annotation(path) -> Sequence:
    with open(path, "r", encoding="utf-8") as fh:
        return sequence_from_dict(json.load(fh))


def save_annotation(seq: Sequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sequence_to_dict(seq), fh, indent=1, sort_keys=True)
        fh.write("\n")
