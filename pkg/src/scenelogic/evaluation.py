"""Scoring and the end-to-end pipeline: ingest, track, compile, saturate,
answer, report."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .facts import CompilerConfig, compile_window
from .inference import answer_query, saturate
from .logicpad import RuleSet, default_ruleset
from .questions import parse_question
from .ragcontext import (
    FACTS_ONLY,
    WITH_INFERENCE,
    ContextPayload,
    build_context,
    template_table,
)
from .scenarios import QAItem, load_qa
from .scene import Sequence, load_annotation, windows
from .tracking import TrackerConfig, link_window


class LengthMismatch(ValueError):
    pass


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage that produced it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class Score:
    n: int
    correct: int
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 1.0

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 1.0


@dataclass
class EvalReport:
    per_category: dict  # category -> Score
    aggregate: Score
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def row(s: Score) -> dict:
            return {"n": s.n, "correct": s.correct, "tp": s.tp, "fp": s.fp,
                    "fn": s.fn, "tn": s.tn, "accuracy": s.accuracy, "f1": s.f1}
        return {
            "per_category": {c: row(s) for c, s in sorted(self.per_category.items())},
            "aggregate": row(self.aggregate),
            "config": self.config_echo,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _score(items: list[tuple[bool, bool]]) -> Score:
    tp = sum(1 for gold, ans in items if gold and ans)
    fp = sum(1 for gold, ans in items if not gold and ans)
    fn = sum(1 for gold, ans in items if gold and not ans)
    tn = sum(1 for gold, ans in items if not gold and not ans)
    return Score(len(items), tp + tn, tp, fp, fn, tn)


def evaluate(qa: list[QAItem], answers: list[bool],
             config_echo: dict | None = None) -> EvalReport:
    """Accuracy and F1 (yes as the positive class), per category and overall."""
    if len(qa) != len(answers):
        raise LengthMismatch(f"{len(qa)} questions vs {len(answers)} answers")
    pairs = list(zip((q.gold for q in qa), answers))
    by_cat: dict[str, list] = {}
    for q, pair in zip(qa, pairs):
        by_cat.setdefault(q.category, []).append(pair)
    return EvalReport(
        per_category={c: _score(v) for c, v in by_cat.items()},
        aggregate=_score(pairs),
        config_echo=config_echo or {},
    )


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    answers: list[bool]
    report: EvalReport
    payloads: list[tuple[QAItem, ContextPayload]]
    saturated: dict  # window_id -> FactSet


def process_sequence(seq: Sequence, rules: RuleSet,
                     track_mode: str = "oracle",
                     cfg: CompilerConfig = CompilerConfig(),
                     tracker_cfg: TrackerConfig = TrackerConfig(),
                     n: int | None = None):
    """Ingest a sequence into per-window compiled facts and saturated sets.

    Returns {window_id: (WindowFacts, FactSet)}.
    """
    n = n if n is not None else min(len(seq.frames), 10)
    try:
        wins = windows(seq, n)
    except Exception as e:
        raise StageError("ingest", str(e)) from e
    out = {}
    for w in wins:
        try:
            tracks = link_window(w, track_mode, tracker_cfg)
        except Exception as e:
            raise StageError("track", str(e)) from e
        try:
            wf = compile_window(w, tracks, cfg, rules)
        except Exception as e:
            raise StageError("compile", str(e)) from e
        try:
            sat = saturate(wf.facts, rules)
        except Exception as e:
            raise StageError("infer", str(e)) from e
        out[w.window_id] = (wf, sat)
    return out


def run_pipeline(sequences, rules: RuleSet | None, questions: list[QAItem],
                 track_mode: str = "oracle",
                 cfg: CompilerConfig = CompilerConfig(),
                 tracker_cfg: TrackerConfig = TrackerConfig(),
                 n: int | None = None,
                 export_context: str | None = None,
                 translator=None) -> PipelineResult:
    """Answer every question over its window and score against gold.

    ``sequences`` is one Sequence or a list of (sequence_key, Sequence);
    questions carry (sequence_key, window_id) implicitly when generated per
    sequence, so for multi-sequence runs pass questions as a list of
    (sequence_key, QAItem) pairs instead.
    """
    rules = rules or default_ruleset()
    if isinstance(sequences, Sequence):
        keyed = {None: sequences}
        qitems = [(None, q) for q in questions]
    else:
        keyed = dict(sequences)
        qitems = list(questions)

    processed = {
        key: process_sequence(seq, rules, track_mode, cfg, tracker_cfg, n)
        for key, seq in keyed.items()
    }

    tbl = template_table(rules) if export_context else None
    answers: list[bool] = []
    payloads: list[tuple[QAItem, ContextPayload]] = []
    flat_qa: list[QAItem] = []
    for key, item in qitems:
        flat_qa.append(item)
        perwin = processed[key]
        if item.window_id not in perwin:
            raise StageError("question", f"window {item.window_id} not available")
        wf, sat = perwin[item.window_id]
        try:
            q = parse_question(item.question, rules, translator)
        except Exception as e:
            raise StageError("question", f"{item.question!r}: {e}") from e
        try:
            ans = answer_query(sat, rules, q)
        except Exception as e:
            raise StageError("infer", f"{item.question!r}: {e}") from e
        answers.append(ans.truth)
        if export_context:
            mode = WITH_INFERENCE if export_context == "c2" else FACTS_ONLY
            payload = build_context(q, ans, wf.facts, tbl, rules, mode,
                                    question_text=item.question)
            payloads.append((item, payload))

    report = evaluate(flat_qa, answers, config_echo={
        "track_mode": track_mode,
        "window": n,
        "compiler": vars(cfg).copy(),
        "tracker": vars(tracker_cfg).copy(),
        # Gold answers come from generator kinematics, not human annotation.
        "qa_protocol": "synthetic gold from scenario generator",
    })
    sat_by_window = {key: {wid: sat for wid, (_, sat) in per.items()}
                     for key, per in processed.items()}
    return PipelineResult(answers, report, payloads, sat_by_window)


def run_scenario_dir(root, rules: RuleSet | None = None,
                     track_mode: str = "oracle",
                     cfg: CompilerConfig = CompilerConfig(),
                     tracker_cfg: TrackerConfig = TrackerConfig(),
                     export_context: str | None = None) -> PipelineResult:
    """Evaluate every scenario directory (annotation.json + qa.json) under
    ``root``."""
    sequences = []
    questions = []
    names = sorted(
        d for d in os.listdir(root)
        if os.path.isfile(os.path.join(root, d, "annotation.json"))
    )
    if not names:
        raise StageError("ingest", f"no scenario directories under {root}")
    for name in names:
        sdir = os.path.join(root, name)
        try:
            seq = load_annotation(os.path.join(sdir, "annotation.json"))
        except FileNotFoundError as e:
            raise StageError("ingest", str(e)) from e
        sequences.append((name, seq))
        for item in load_qa(os.path.join(sdir, "qa.json")):
            questions.append((name, item))
    return run_pipeline(sequences, rules, questions, track_mode, cfg,
                        tracker_cfg, export_context=export_context)
