"""Command-line interface.

Subcommands: gen, ingest, query, repl, eval.  A YAML config file supplies
compiler/tracker thresholds and the window length; flags override it.
Exit status is 0 on success, or a stage-specific nonzero code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from .evaluation import PipelineResult, StageError, run_scenario_dir
from .facts import CompilerConfig, compile_window
from .inference import answer_query, saturate
from .logicpad import default_ruleset, load_rule_file
from .questions import (
    NoPatternMatch,
    UnknownVocabulary,
    answer_to_text,
    parse_fol_query,
    parse_nl_question,
)
from .scenarios import KINDS, ScenarioSpec, generate_scenario, write_scenario
from .scene import load_annotation, windows
from .tracking import TrackerConfig, link_window

EXIT_CODES = {
    "config": 2, "ingest": 3, "track": 4, "compile": 5,
    "infer": 6, "question": 7, "eval": 8, "gen": 9,
}


def _fail(stage: str, message: str) -> int:
    print(f"{stage}: {message}", file=sys.stderr)
    return EXIT_CODES.get(stage, 1)


def _load_config(path: str | None):
    doc = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
    cfg = CompilerConfig(**doc.get("compiler", {}))
    tracker = TrackerConfig(**doc.get("tracker", {}))
    window = doc.get("window")
    return cfg, tracker, window


def _ruleset(args):
    if getattr(args, "rules", None):
        return load_rule_file(args.rules)
    return default_ruleset()


def _common_flags(sub):
    sub.add_argument("--config", help="YAML config file")
    sub.add_argument("--rules", help="LogicPad rule file (default: built-in)")
    sub.add_argument("--track-mode", choices=("oracle", "inferred"),
                     default="oracle")
    sub.add_argument("--window", type=int, help="window length (default 10)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenelogic",
                                description="FOL knowledge engine for road scenes")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic scenarios")
    g.add_argument("--kind", required=True,
                   help=f"one of {', '.join(KINDS)}, or 'all'")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=1,
                   help="scenarios per kind (consecutive seeds)")

    i = sub.add_parser("ingest", help="compile an annotation file into facts")
    i.add_argument("file")
    i.add_argument("--dump-tracks", action="store_true")
    i.add_argument("--dump-facts", action="store_true")
    _common_flags(i)

    q = sub.add_parser("query", help="answer one question over a file")
    q.add_argument("file")
    q.add_argument("--q", required=True, dest="question")
    q.add_argument("--fol", action="store_true",
                   help="the question is FOL query text, not English")
    q.add_argument("--window-id", type=int, default=0)
    _common_flags(q)

    r = sub.add_parser("repl", help="interactive question loop")
    r.add_argument("file")
    _common_flags(r)

    e = sub.add_parser("eval", help="score scenario directories")
    e.add_argument("dir")
    e.add_argument("--report", help="write the JSON report here")
    e.add_argument("--export-context", choices=("c2", "c3"))
    e.add_argument("--context-dir", help="directory for exported payloads")
    _common_flags(e)

    return p


def _cmd_gen(args) -> int:
    kinds = KINDS if args.kind == "all" else (args.kind,)
    try:
        for kind in kinds:
            for j in range(args.count):
                spec = ScenarioSpec(kind, args.seed + j)
                sc = generate_scenario(spec)
                write_scenario(sc, os.path.join(args.out, f"{kind}_{spec.seed:04d}"))
    except Exception as e:
        return _fail("gen", str(e))
    print(f"wrote {len(kinds) * args.count} scenario(s) under {args.out}")
    return 0


def _prepare(args):
    cfg, tracker, window = _load_config(getattr(args, "config", None))
    if getattr(args, "window", None):
        window = args.window
    rules = _ruleset(args)
    return cfg, tracker, window, rules


def _cmd_ingest(args) -> int:
    try:
        cfg, tracker, window, rules = _prepare(args)
    except Exception as e:
        return _fail("config", str(e))
    try:
        seq = load_annotation(args.file)
    except Exception as e:
        return _fail("ingest", str(e))
    n = window or min(len(seq.frames), 10)
    try:
        wins = windows(seq, n)
    except Exception as e:
        return _fail("ingest", str(e))
    for w in wins:
        try:
            tracks = link_window(w, args.track_mode, tracker)
        except Exception as e:
            return _fail("track", str(e))
        if args.dump_tracks:
            doc = [
                {
                    "instance_id": t.instance_id,
                    "category": t.category,
                    "attributes": t.attributes,
                    "frames": {
                        str(pos): {"centroid_px": list(o.centroid_px),
                                   "depth_m": o.depth_m}
                        for pos, o in t.frames_sorted()
                    },
                }
                for t in tracks
            ]
            print(json.dumps({"window_id": w.window_id, "tracks": doc},
                             indent=1, sort_keys=True))
            continue
        try:
            wf = compile_window(w, tracks, cfg, rules)
        except Exception as e:
            return _fail("compile", str(e))
        if args.dump_facts:
            for f in wf.facts:
                print(f)
            sidecar = {str(f): ev for f, ev in sorted(
                wf.provenance.items(), key=lambda kv: str(kv[0]))}
            print(json.dumps({"window_id": w.window_id, "evidence": sidecar},
                             indent=1, sort_keys=True))
        else:
            print(f"window {w.window_id}: {len(wf.facts)} facts, "
                  f"{len(tracks)} tracks")
    return 0


def _answer_one(seq, rules, cfg, tracker, window, args):
    n = window or min(len(seq.frames), 10)
    wins = windows(seq, n)
    by_id = {w.window_id: w for w in wins}
    if args.window_id not in by_id:
        raise StageError("question", f"window {args.window_id} not available")
    w = by_id[args.window_id]
    tracks = link_window(w, args.track_mode, tracker)
    wf = compile_window(w, tracks, cfg, rules)
    sat = saturate(wf.facts, rules)
    if args.fol:
        q = parse_fol_query(args.question, rules)
    else:
        q = parse_nl_question(args.question, rules)
    return answer_query(sat, rules, q), q


def _cmd_query(args) -> int:
    try:
        cfg, tracker, window, rules = _prepare(args)
    except Exception as e:
        return _fail("config", str(e))
    try:
        seq = load_annotation(args.file)
    except Exception as e:
        return _fail("ingest", str(e))
    try:
        ans, q = _answer_one(seq, rules, cfg, tracker, window, args)
    except StageError as e:
        return _fail(e.stage, str(e))
    except (NoPatternMatch, UnknownVocabulary) as e:
        return _fail("question", str(e))
    except Exception as e:
        return _fail("infer", str(e))
    print(answer_to_text(ans, q))
    for step in ans.trace.steps:
        print(f"  {step}")
    return 0


def _cmd_repl(args) -> int:
    try:
        cfg, tracker, window, rules = _prepare(args)
        seq = load_annotation(args.file)
        n = window or min(len(seq.frames), 10)
        wins = windows(seq, n)
    except Exception as e:
        return _fail("ingest", str(e))

    current = wins[0].window_id
    prepared = {}

    def sat_for(wid):
        if wid not in prepared:
            w = next(x for x in wins if x.window_id == wid)
            tracks = link_window(w, args.track_mode, tracker)
            wf = compile_window(w, tracks, cfg, rules)
            prepared[wid] = (wf, saturate(wf.facts, rules))
        return prepared[wid]

    print(f"{len(wins)} window(s); current window {current}. "
          ":facts lists facts, :window K switches, :fol <query> asks in FOL, "
          ":quit exits.")
    while True:
        try:
            line = input("? ").strip()
        except EOFError:
            return 0
        if not line:
            continue
        if line in (":quit", ":q"):
            return 0
        try:
            if line.startswith(":window"):
                current = int(line.split()[1])
                sat_for(current)
                print(f"window {current}")
                continue
            wf, sat = sat_for(current)
            if line == ":facts":
                for f in wf.facts:
                    print(f)
                continue
            if line.startswith(":fol"):
                q = parse_fol_query(line[len(":fol"):].strip(), rules)
            else:
                q = parse_nl_question(line, rules)
            ans = answer_query(sat, rules, q)
            print(answer_to_text(ans, q))
        except Exception as e:
            print(f"error: {e}")


def _cmd_eval(args) -> int:
    try:
        cfg, tracker, window, rules = _prepare(args)
    except Exception as e:
        return _fail("config", str(e))
    try:
        result: PipelineResult = run_scenario_dir(
            args.dir, rules, args.track_mode, cfg, tracker,
            export_context=args.export_context,
        )
    except StageError as e:
        return _fail(e.stage, str(e))
    report_json = result.report.to_json()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report_json + "\n")
    print(report_json)
    if args.export_context and result.payloads:
        outdir = args.context_dir or os.path.join(args.dir, f"context_{args.export_context}")
        os.makedirs(outdir, exist_ok=True)
        for idx, (item, payload) in enumerate(result.payloads):
            path = os.path.join(outdir, f"{idx:04d}.txt")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(f"QUESTION\n{payload.question}\n\n{payload.retrieved}")
            with open(path.replace(".txt", ".json"), "w", encoding="utf-8") as fh:
                fh.write(payload.to_json() + "\n")
        print(f"wrote {len(result.payloads)} context payload(s) to {outdir}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "ingest": _cmd_ingest,
        "query": _cmd_query,
        "repl": _cmd_repl,
        "eval": _cmd_eval,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
