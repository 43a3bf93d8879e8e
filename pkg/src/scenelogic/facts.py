"""Ground-fact compilation: evaluate every atomic predicate over a window's
trajectories and geometry, then advance the sliding window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fol import Const, Literal
from .geometry import kinematics
from .inference import FactSet
from .logicpad import RuleSet
from .scene import (
    STATIC_CATEGORIES,
    SURFACE_CATEGORIES,
    FrameObservation,
    SceneWindow,
    bev_of,
    build_window,
)
from .tracking import Trajectory, TrackerConfig, link_window, presence


class UndeclaredCategory(ValueError):
    pass


class NonConsecutiveFrame(ValueError):
    pass


@dataclass(frozen=True)
class CompilerConfig:
    eps_move: float = 0.1  # m of net displacement before Moves holds
    eps_speed: float = 0.2  # m/s of end-vs-start speed change
    eps_contact: float = 0.5  # m final separation for "to zero"
    close_depth: float = 10.0  # m mean depth for CloseToCamera
    left_frac: float = 1.0 / 3.0
    right_frac: float = 2.0 / 3.0
    trend_frac: float = 0.7  # fraction of steps a distance trend must hold
    image_width: float | None = None  # None: twice the optical center x

    def __post_init__(self):
        if min(self.eps_move, self.eps_speed, self.eps_contact,
               self.close_depth, self.trend_frac) <= 0:
            raise ValueError("thresholds must be positive")
        if not self.left_frac < self.right_frac:
            raise ValueError("left_frac must be below right_frac")


@dataclass
class WindowFacts:
    window_id: int
    facts: FactSet
    provenance: dict  # Literal -> numeric evidence
    window: SceneWindow | None = None
    tracks: list[Trajectory] | None = None


def _window_positions(t: Trajectory, w: SceneWindow) -> dict[int, tuple[float, float]]:
    """Per-frame BEV positions expressed in the window's common origin."""
    return {
        pos: w.to_window_frame(pos, bev_of(obs, w.intrinsics))
        for pos, obs in t.observations.items()
    }


def _dense_positions(keyed: dict[int, tuple[float, float]]) -> list[tuple[float, float]]:
    """Fill interior occlusion gaps by linear interpolation."""
    keys = sorted(keyed)
    first, last = keys[0], keys[-1]
    dense = []
    for p in range(first, last + 1):
        if p in keyed:
            dense.append(keyed[p])
        else:
            lo = max(k for k in keys if k < p)
            hi = min(k for k in keys if k > p)
            f = (p - lo) / (hi - lo)
            a, b = keyed[lo], keyed[hi]
            dense.append((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])))
    return dense


def _vocab_constant(rules: RuleSet, section: str, value: str) -> str:
    table = rules.vocabulary.get(section, {})
    lowered = {str(k).lower(): v for k, v in table.items()}
    return lowered.get(str(value).lower(), str(value))


def _bottom_mid(bbox) -> tuple[float, float]:
    return ((bbox[0] + bbox[2]) / 2.0, bbox[3])


def _contains(bbox, pt) -> bool:
    return bbox[0] <= pt[0] <= bbox[2] and bbox[1] <= pt[1] <= bbox[3]


def compile_window(w: SceneWindow, tracks: list[Trajectory],
                   cfg: CompilerConfig = CompilerConfig(),
                   rules: RuleSet | None = None) -> WindowFacts:
    """Evaluate the atomic predicate catalog over the window's trajectories."""
    facts: list[Literal] = []
    provenance: dict = {}

    def emit(pred: str, *args: str, **evidence):
        lit = Literal(pred, tuple(Const(a) for a in args))
        facts.append(lit)
        if evidence:
            provenance[lit] = evidence

    if rules is not None:
        declared = {d.name for d in rules.atomic_predicates()}
        for t in tracks:
            if t.category not in declared:
                raise UndeclaredCategory(
                    f"{t.instance_id}: category {t.category!r} is not a declared atomic predicate"
                )

    k = w.intrinsics
    width = cfg.image_width if cfg.image_width is not None else 2.0 * k.cx

    positions = {t.instance_id: _window_positions(t, w) for t in tracks}

    for t in tracks:
        name = t.instance_id
        emit(t.category, name)

        flags = presence(t, w.n)
        if flags.appears:
            emit("Appears", name, first_frame=flags.first_frame)
        if flags.disappears:
            emit("Disappears", name, last_frame=flags.last_frame)

        dense = _dense_positions(positions[name])
        if len(dense) >= 2:
            kin = kinematics(dense, k)
            if kin.displacement_total > cfg.eps_move:
                emit("Moves", name, displacement_m=kin.displacement_total)
            delta = kin.velocity[-1] - kin.velocity[0]
            if delta > cfg.eps_speed:
                emit("SpeedUp", name, velocity_delta=delta)
            elif -delta > cfg.eps_speed:
                emit("SpeedDown", name, velocity_delta=delta)

        xs = [obs.centroid_px[0] for _, obs in t.frames_sorted()]
        mean_x = float(np.mean(xs))
        if mean_x < width * cfg.left_frac:
            emit("AtLeft", name, mean_centroid_x=mean_x)
        elif mean_x > width * cfg.right_frac:
            emit("AtRight", name, mean_centroid_x=mean_x)
        else:
            emit("AtCenter", name, mean_centroid_x=mean_x)

        mean_depth = float(np.mean([obs.depth_m for _, obs in t.frames_sorted()]))
        if mean_depth < cfg.close_depth:
            emit("CloseToCamera", name, mean_depth_m=mean_depth)

        if "color" in t.attributes:
            emit("ColOfRel", name, _vocab_constant(rules, "colors", t.attributes["color"])
                 if rules else str(t.attributes["color"]))
        if "type" in t.attributes:
            emit("TypeOfRel", name, _vocab_constant(rules, "types", t.attributes["type"])
                 if rules else str(t.attributes["type"]))

    # Pairwise relations over frames where both instances are observed.
    bev_by_frame = {
        t.instance_id: {pos: bev_of(obs, k) for pos, obs in t.observations.items()}
        for t in tracks
    }
    for i, a in enumerate(tracks):
        for b in tracks[i + 1:]:
            common = sorted(set(a.observations) & set(b.observations))
            if len(common) >= 2:
                # Per-frame distance in that frame's own coordinates; rigid
                # motion of the camera cannot change it.
                d = [float(np.hypot(
                    bev_by_frame[a.instance_id][p][0] - bev_by_frame[b.instance_id][p][0],
                    bev_by_frame[a.instance_id][p][1] - bev_by_frame[b.instance_id][p][1]))
                    for p in common]
                steps = len(d) - 1
                dec = sum(1 for u, v in zip(d, d[1:]) if v < u)
                inc = sum(1 for u, v in zip(d, d[1:]) if v > u)
                if dec / steps >= cfg.trend_frac and d[0] - d[-1] > cfg.eps_move:
                    for x, y in ((a, b), (b, a)):
                        emit("DistanceDecreases", x.instance_id, y.instance_id,
                             initial_m=d[0], final_m=d[-1])
                        if d[-1] < cfg.eps_contact:
                            emit("DistanceDecreasesToZero", x.instance_id,
                                 y.instance_id, final_m=d[-1])
                if inc / steps >= cfg.trend_frac and d[-1] - d[0] > cfg.eps_move:
                    for x, y in ((a, b), (b, a)):
                        emit("DistanceIncreases", x.instance_id, y.instance_id,
                             initial_m=d[0], final_m=d[-1])

    # Support relations: only tracked dynamic objects rest on surfaces.
    for a in tracks:
        if a.category in STATIC_CATEGORIES:
            continue
        for s in tracks:
            if s.category not in SURFACE_CATEGORIES or s is a:
                continue
            common = sorted(set(a.observations) & set(s.observations))
            if not common:
                continue
            hits = sum(
                1 for p in common
                if _contains(s.observations[p].bbox, _bottom_mid(a.observations[p].bbox))
            )
            if hits / len(common) > 0.5:
                emit("On", a.instance_id, s.instance_id,
                     containment_frac=hits / len(common))

    fact_set = FactSet(frozenset(facts), w.window_id)
    return WindowFacts(w.window_id, fact_set, provenance, window=w, tracks=list(tracks))


def advance(kb: WindowFacts, next_frame: FrameObservation,
            rules: RuleSet | None = None,
            cfg: CompilerConfig = CompilerConfig(),
            mode: str = "inferred",
            tracker_cfg: TrackerConfig = TrackerConfig()) -> WindowFacts:
    """Slide the window one frame forward and recompile facts from scratch."""
    if kb.window is None:
        raise ValueError("WindowFacts has no attached window to advance")
    last = kb.window.frames[-1].frame_index
    if next_frame.frame_index != last + 1:
        raise NonConsecutiveFrame(
            f"expected frame {last + 1}, got {next_frame.frame_index}"
        )
    frames = kb.window.frames[1:] + (next_frame,)
    w = build_window(frames, kb.window.intrinsics, window_id=kb.window.window_id + 1)
    tracks = link_window(w, mode, tracker_cfg)
    return compile_window(w, tracks, cfg, rules)
