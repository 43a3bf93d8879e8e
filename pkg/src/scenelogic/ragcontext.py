"""Context export for external language models: window facts as template
sentences, optionally narrowed to the inference trace that answered a query.

``facts_only`` payloads carry every fact sentence; ``with_inference``
payloads carry the verdict plus only the sentences the proof leaned on.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .fol import Const, Literal, apply
from .inference import Answer, FactSet, Query
from .logicpad import RuleSet
from .questions import answer_to_text, print_query

FACTS_ONLY = "facts_only"
WITH_INFERENCE = "with_inference"


class MissingTemplate(KeyError):
    pass


@dataclass(frozen=True)
class TemplateTable:
    templates: dict  # predicate name -> sentence template

    def render(self, fact: Literal) -> str:
        tpl = self.templates.get(fact.pred)
        if tpl is None:
            raise MissingTemplate(fact.pred)
        return tpl.format(*[str(a) for a in fact.args])

    def validate(self, rules: RuleSet) -> None:
        """Every declared predicate templated, every slot count matching."""
        for d in rules.declarations:
            tpl = self.templates.get(d.name)
            if tpl is None:
                raise MissingTemplate(d.name)
            slots = {int(m) for m in re.findall(r"\{(\d+)\}", tpl)}
            if slots != set(range(d.arity)):
                raise ValueError(
                    f"template for {d.name} uses slots {sorted(slots)}, arity is {d.arity}"
                )
        extra = set(self.templates) - {d.name for d in rules.declarations}
        if extra:
            raise ValueError(f"templates for undeclared predicates: {sorted(extra)}")


def template_table(rules: RuleSet) -> TemplateTable:
    """The table shipped in the rule file's ``templates`` section."""
    tbl = TemplateTable(dict(rules.templates))
    tbl.validate(rules)
    return tbl


def _fact_order(f: Literal):
    return (f.pred, tuple(str(a) for a in f.args))


def export_templates(facts, tbl: TemplateTable) -> list[str]:
    """One sentence per fact, ordered by predicate then arguments."""
    fact_set = facts.facts if isinstance(facts, FactSet) else facts.facts.facts
    return [tbl.render(f) for f in sorted(fact_set, key=_fact_order)]


@dataclass(frozen=True)
class ContextPayload:
    question: str
    retrieved: str
    mode: str

    def to_json(self) -> str:
        return json.dumps(
            {"question": self.question, "mode": self.mode, "retrieved": self.retrieved},
            indent=1, sort_keys=True,
        )


def _support_facts(q: Query, a: Answer, base: FactSet) -> list[Literal]:
    """Base facts the answer rests on: trace premises plus the facts that
    ground the query's positive conjuncts; for a refuted query, the facts
    about the constants the query names."""
    support: set[Literal] = set()
    if a.truth:
        for step in a.trace.steps:
            for p in step.premises:
                if p in base:
                    support.add(p)
        for sub in a.bindings:
            for c in q.conjuncts:
                if not c.negated and c.pred != "=":
                    ground = apply(sub, c)
                    if ground in base:
                        support.add(ground)
    else:
        named = {t for c in q.conjuncts for t in c.args if isinstance(t, Const)}
        for f in base:
            if named and any(arg in named for arg in f.args):
                support.add(f)
    return sorted(support, key=_fact_order)


def build_context(q: Query, a: Answer, facts, tbl: TemplateTable,
                  rules: RuleSet, mode: str = WITH_INFERENCE,
                  question_text: str | None = None) -> ContextPayload:
    """Assemble the retrieval block handed to a language model.

    Sections appear in the fixed order FACTS / VERDICT / SUPPORT; the
    facts_only mode emits the FACTS section alone.
    """
    base = facts.facts if not isinstance(facts, FactSet) else facts
    question = question_text if question_text is not None else print_query(q, rules)

    if mode == FACTS_ONLY:
        sentences = export_templates(base, tbl)
        body = "FACTS\n" + "\n".join(sentences) + "\n"
        return ContextPayload(question, body, mode)
    if mode != WITH_INFERENCE:
        raise ValueError(f"unknown context mode {mode!r}")

    sentences = [tbl.render(f) for f in _support_facts(q, a, base)]
    lines = ["FACTS"]
    lines.extend(sentences)
    lines.append("")
    lines.append("VERDICT")
    lines.append(answer_to_text(a, q))
    if a.trace.steps:
        lines.append("")
        lines.append("SUPPORT")
        lines.extend(str(s) for s in a.trace.steps)
    return ContextPayload(question, "\n".join(lines) + "\n", mode)
