"""Query resolution over ground facts and stratified rules.

Forward chaining computes the least fixpoint stratum by stratum under the
closed-world reading of negation: a negated body atom holds when the positive
atom is absent from the fully saturated lower strata.  A resolution-refutation
mode over the clausal form answers ground queries through an independent
mechanism; ``brute_force_models`` is the naive test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

from .fol import Const, Literal, Substitution, Var, apply, to_cnf, unify
from .logicpad import RuleDecl, RuleSet, UnknownPredicate

DEFAULT_DEPTH_BOUND = 64


class DepthExceeded(RuntimeError):
    pass


class OracleTooLarge(RuntimeError):
    pass


class NonGroundQuery(ValueError):
    """Resolution mode accepts ground queries only."""


# ---------------------------------------------------------------------------
# Facts and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    derived: Literal
    rule: str
    premises: tuple[Literal, ...]

    def __str__(self):
        inner = ", ".join(str(p) for p in self.premises)
        return f"{self.derived} <- {self.rule}({inner})"


@dataclass(frozen=True)
class ProofTrace:
    steps: tuple[TraceStep, ...] = ()

    def __str__(self):
        return "\n".join(str(s) for s in self.steps)


@dataclass(frozen=True)
class FactSet:
    """Ground positive literals for one window, indexed by predicate and
    first argument."""

    facts: frozenset[Literal]
    window_id: int = 0
    trace: ProofTrace | None = field(default=None, compare=False)

    def __post_init__(self):
        for f in self.facts:
            if f.negated:
                raise ValueError(f"negative literal in fact set: {f}")
            if not f.is_ground():
                raise ValueError(f"non-ground fact: {f}")

    @staticmethod
    def of(literals, window_id: int = 0) -> "FactSet":
        return FactSet(frozenset(literals), window_id)

    def __contains__(self, lit: Literal) -> bool:
        return lit in self.facts

    def __len__(self):
        return len(self.facts)

    def __iter__(self):
        return iter(self.sorted())

    def sorted(self) -> list[Literal]:
        return sorted(self.facts, key=_fact_key)

    @cached_property
    def index(self) -> dict:
        """pred -> first-arg name -> sorted facts; '' collects all of a pred."""
        idx: dict = {}
        for f in self.sorted():
            by_first = idx.setdefault(f.pred, {})
            by_first.setdefault("", []).append(f)
            if f.args:
                by_first.setdefault(str(f.args[0]), []).append(f)
        return idx

    def lookup(self, pred: str, first=None) -> list[Literal]:
        by_first = self.index.get(pred)
        if not by_first:
            return []
        key = str(first) if first is not None else ""
        return by_first.get(key, [])

    @cached_property
    def constants(self) -> tuple[Const, ...]:
        seen = {a for f in self.facts for a in f.args if isinstance(a, Const)}
        return tuple(sorted(seen, key=lambda c: c.name))


def _fact_key(lit: Literal):
    return (lit.pred, tuple(str(a) for a in lit.args))


# ---------------------------------------------------------------------------
# Queries and answers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Query:
    """A conjunction of literals; negated conjuncts are closed-world tests."""

    conjuncts: tuple[Literal, ...]

    def __post_init__(self):
        if not any(not c.negated for c in self.conjuncts):
            raise ValueError("a query needs at least one positive conjunct")

    def variables(self) -> list[Var]:
        out: list[Var] = []
        for c in self.conjuncts:
            for a in c.args:
                if isinstance(a, Var) and a not in out:
                    out.append(a)
        return out

    def is_ground(self) -> bool:
        return not self.variables()


@dataclass(frozen=True)
class Answer:
    truth: bool
    bindings: tuple[Substitution, ...]
    trace: ProofTrace = ProofTrace()


# ---------------------------------------------------------------------------
# Forward chaining
# ---------------------------------------------------------------------------

def _rule_vars(rule: RuleDecl) -> list[Var]:
    out: list[Var] = []
    for lit in (*rule.body, rule.head):
        for a in lit.args:
            if isinstance(a, Var) and a not in out:
                out.append(a)
    return out


def _active_domain(base: FactSet, rules: RuleSet) -> tuple[Const, ...]:
    """Constants the semantics ranges over: those in the base plus those
    written into the rules themselves."""
    consts = set(base.constants)
    for r in rules.rules:
        for lit in (r.head, *r.body):
            consts.update(a for a in lit.args if isinstance(a, Const))
    return tuple(sorted(consts, key=lambda c: c.name))


def _match_body(rule: RuleDecl, facts: FactSet, domain: tuple[Const, ...]):
    """Yield (substitution, positive premises) for every grounding of the rule
    body satisfied by ``facts``.  Variables not bound by a positive atom are
    enumerated over the constant domain."""
    positive = [l for l in rule.body if not l.negated and l.pred != "="]
    negative = [l for l in rule.body if l.negated and l.pred != "="]
    equalities = [l for l in rule.body if l.pred == "="]

    def finish(sub: Substitution, premises: tuple[Literal, ...]):
        bound = set(sub)
        free = [v for v in _rule_vars(rule) if v not in bound]
        for combo in product(domain, repeat=len(free)):
            full = dict(sub)
            full.update(zip(free, combo))
            ok = True
            for eq in equalities:
                a, b = (apply(full, t) for t in eq.args)
                if (a == b) == eq.negated:
                    ok = False
                    break
            if ok and all(apply(full, n).atom not in facts for n in negative):
                yield full, premises

    def walk(i: int, sub: Substitution, premises: tuple[Literal, ...]):
        if i == len(positive):
            yield from finish(sub, premises)
            return
        atom = apply(sub, positive[i])
        first = atom.args[0] if atom.args and isinstance(atom.args[0], Const) else None
        for fact in facts.lookup(atom.pred, first):
            s2 = unify(atom, fact, dict(sub))
            if s2 is not None:
                yield from walk(i + 1, s2, premises + (fact,))

    yield from walk(0, {}, ())


def saturate(base: FactSet, rules: RuleSet,
             depth_bound: int = DEFAULT_DEPTH_BOUND) -> FactSet:
    """Least fixpoint of the stratified rules over ``base``, with one trace
    step per derived fact."""
    known = set(base.facts)
    steps: list[TraceStep] = []
    current = FactSet(frozenset(known), base.window_id)
    domain = _active_domain(base, rules)

    for stratum_rules in rules.rules_by_stratum():
        rounds = 0
        while True:
            fresh: list[TraceStep] = []
            for rule in stratum_rules:
                for sub, premises in _match_body(rule, current, domain):
                    head = apply(sub, rule.head)
                    if head not in known:
                        known.add(head)
                        fresh.append(TraceStep(head, rule.name, premises))
            if not fresh:
                break
            rounds += 1
            if rounds > depth_bound:
                raise DepthExceeded(f"no fixpoint within {depth_bound} rounds")
            steps.extend(fresh)
            current = FactSet(frozenset(known), base.window_id)

    return FactSet(frozenset(known), base.window_id, trace=ProofTrace(tuple(steps)))


# ---------------------------------------------------------------------------
# Query answering
# ---------------------------------------------------------------------------

def _check_query(q: Query, rules: RuleSet) -> None:
    for c in q.conjuncts:
        if c.pred == "=":
            continue
        d = rules.decl(c.pred)
        if d is None:
            raise UnknownPredicate(f"query uses undeclared predicate {c.pred!r}")
        if d.arity != len(c.args):
            raise UnknownPredicate(
                f"query uses {c.pred} with {len(c.args)} arguments, declared {d.arity}"
            )


def _enumerate_bindings(q: Query, sat: FactSet) -> list[Substitution]:
    domain = sat.constants
    positive = [c for c in q.conjuncts if not c.negated and c.pred != "="]
    negative = [c for c in q.conjuncts if c.negated and c.pred != "="]
    equalities = [c for c in q.conjuncts if c.pred == "="]
    qvars = q.variables()

    results: list[Substitution] = []

    def check_negative(sub: Substitution) -> bool:
        # Closed-world test; variables a negated conjunct leaves free are
        # read as "for no grounding".
        for neg in negative:
            atom = apply(sub, neg.atom)
            free = sorted({a for a in atom.args if isinstance(a, Var)},
                          key=lambda v: v.name)
            found = False
            for combo in product(domain, repeat=len(free)):
                if apply(dict(zip(free, combo)), atom) in sat:
                    found = True
                    break
            if found:
                return False
        for eq in equalities:
            a, b = (apply(sub, t) for t in eq.args)
            if (a == b) == eq.negated:
                return False
        return True

    def walk(i: int, sub: Substitution):
        if i == len(positive):
            if check_negative(sub):
                results.append({v: sub[v] for v in qvars if v in sub})
            return
        atom = apply(sub, positive[i])
        first = atom.args[0] if atom.args and isinstance(atom.args[0], Const) else None
        for fact in sat.lookup(atom.pred, first):
            s2 = unify(atom, fact, dict(sub))
            if s2 is not None:
                walk(i + 1, s2)

    walk(0, {})

    unique: list[Substitution] = []
    seen = set()
    for sub in results:
        key = tuple(str(sub.get(v, "")) for v in qvars)
        if key not in seen:
            seen.add(key)
            unique.append(sub)
    unique.sort(key=lambda s: tuple(str(s.get(v, "")) for v in qvars))
    return unique


def _answer_trace(q: Query, bindings, sat: FactSet) -> ProofTrace:
    """Restrict the saturation trace to the steps supporting the answer."""
    if sat.trace is None or not bindings:
        return ProofTrace()
    by_fact = {s.derived: s for s in sat.trace.steps}
    needed: set[Literal] = set()

    def pull(fact: Literal):
        if fact in needed:
            return
        needed.add(fact)
        step = by_fact.get(fact)
        if step:
            for p in step.premises:
                pull(p)

    for sub in bindings:
        for c in q.conjuncts:
            if not c.negated and c.pred != "=":
                pull(apply(sub, c))
    return ProofTrace(tuple(s for s in sat.trace.steps if s.derived in needed))


def answer_query(sat: FactSet, rules: RuleSet, q: Query) -> Answer:
    """Answer a query against an already saturated fact set."""
    _check_query(q, rules)
    bindings = _enumerate_bindings(q, sat)
    return Answer(bool(bindings), tuple(bindings), _answer_trace(q, bindings, sat))


def resolve(base: FactSet, rules: RuleSet, q: Query,
            method: str = "chaining",
            depth_bound: int = DEFAULT_DEPTH_BOUND) -> Answer:
    """Enumerate all satisfying ground bindings of the query.

    ``method="resolution"`` answers ground queries by refutation over the
    clausal form instead of consulting the forward-chained fixpoint.
    """
    _check_query(q, rules)
    if method == "resolution":
        return _resolve_by_refutation(base, rules, q)
    return answer_query(saturate(base, rules, depth_bound), rules, q)


# ---------------------------------------------------------------------------
# Trace checking
# ---------------------------------------------------------------------------

def check_trace(t: ProofTrace, base: FactSet, rules: RuleSet) -> bool:
    """True when every step instantiates its named rule from premises that
    were available at that point."""
    by_name = {r.name: r for r in rules.rules}
    available = set(base.facts)
    all_facts = available | {s.derived for s in t.steps}
    for step in t.steps:
        rule = by_name.get(step.rule)
        if rule is None:
            return False
        positive = [l for l in rule.body if not l.negated and l.pred != "="]
        if len(positive) != len(step.premises):
            return False
        sub: Substitution | None = {}
        for pat, fact in zip(positive, step.premises):
            sub = unify(pat, fact, sub)
            if sub is None:
                return False
        if any(p not in available for p in step.premises):
            return False
        # Ground remaining variables from the head.
        sub = unify(rule.head, step.derived, sub)
        if sub is None:
            return False
        for neg in (l for l in rule.body if l.negated and l.pred != "="):
            atom = apply(sub, neg.atom)
            if atom.is_ground() and atom in all_facts:
                return False
        available.add(step.derived)
    return True


# ---------------------------------------------------------------------------
# Naive oracle
# ---------------------------------------------------------------------------

def brute_force_models(base: FactSet, rules: RuleSet,
                       max_atoms: int = 10_000) -> FactSet:
    """Stratified semantics by exhaustive grounding.  Test oracle only."""
    domain = _active_domain(base, rules)
    n = len(domain)
    total = sum(n ** (d.arity) for d in rules.declarations)
    if total > max_atoms:
        raise OracleTooLarge(f"{total} ground atoms exceed the {max_atoms} bound")

    facts = set(base.facts)
    for stratum_rules in rules.rules_by_stratum():
        while True:
            added = False
            for rule in stratum_rules:
                rvars = _rule_vars(rule)
                for combo in product(domain, repeat=len(rvars)):
                    sub = dict(zip(rvars, combo))
                    ok = True
                    for lit in rule.body:
                        if lit.pred == "=":
                            a, b = (apply(sub, t) for t in lit.args)
                            if (a == b) == lit.negated:
                                ok = False
                                break
                        elif lit.negated:
                            if apply(sub, lit.atom) in facts:
                                ok = False
                                break
                        elif apply(sub, lit) not in facts:
                            ok = False
                            break
                    if ok:
                        head = apply(sub, rule.head)
                        if head not in facts:
                            facts.add(head)
                            added = True
            if not added:
                break
    return FactSet(frozenset(facts), base.window_id)


# ---------------------------------------------------------------------------
# Resolution-refutation mode
# ---------------------------------------------------------------------------

def _propositional_refute(clauses: list[frozenset], goal: Literal,
                          max_clauses: int = 50_000) -> bool:
    """Ground resolution with the negated goal as set of support."""
    neg_goal = frozenset([goal.negate()])
    usable = [c for c in clauses]
    sos = [neg_goal]
    seen = set(map(frozenset, usable)) | {neg_goal}
    while sos:
        given = sos.pop(0)
        if not given:
            return True
        for other in usable + [given]:
            for lit in given:
                if lit.negate() in other:
                    resolvent = (given - {lit}) | (other - {lit.negate()})
                    if any(l.negate() in resolvent for l in resolvent):
                        continue
                    fr = frozenset(resolvent)
                    if fr in seen:
                        continue
                    if not fr:
                        return True
                    seen.add(fr)
                    sos.append(fr)
                    if len(seen) > max_clauses:
                        raise DepthExceeded("resolution clause budget exhausted")
        usable.append(given)
    return False


def _ground_rule_clauses(rules: RuleSet, stratum_rules: list[RuleDecl],
                         domain: tuple[Const, ...]) -> list[frozenset]:
    grounded: list[frozenset] = []
    for rule in stratum_rules:
        for clause in to_cnf(rule.statement):
            cvars = sorted({v for l in clause.literals for a in l.args
                            for v in ([a] if isinstance(a, Var) else [])},
                           key=lambda v: v.name)
            for combo in product(domain, repeat=len(cvars)):
                sub = dict(zip(cvars, combo))
                lits = set()
                tautology = False
                for lit in clause.literals:
                    g = apply(sub, lit)
                    if g.negate() in lits:
                        tautology = True
                        break
                    lits.add(g)
                if not tautology:
                    grounded.append(frozenset(lits))
    return grounded


def _resolve_by_refutation(base: FactSet, rules: RuleSet, q: Query) -> Answer:
    if not q.is_ground():
        raise NonGroundQuery("resolution mode requires a ground query")

    domain = _active_domain(base, rules)

    # Only predicates the query can reach through rule bodies matter.
    needed = {c.pred for c in q.conjuncts if c.pred != "="}
    changed = True
    while changed:
        changed = False
        for r in rules.rules:
            if r.head.pred in needed:
                for b in r.body:
                    if b.pred != "=" and b.pred not in needed:
                        needed.add(b.pred)
                        changed = True

    # Evaluate strata bottom-up.  Literals already decided below (or fixed by
    # the base) simplify out of each stratum's ground clauses, leaving a Horn
    # set; every remaining atom is then settled by refutation.
    strata_preds: dict[int, list] = {}
    for d in rules.declarations:
        if d.name in needed:
            strata_preds.setdefault(rules.strata.get(d.name, 0), []).append(d)

    proven: set[Literal] = set(base.facts)
    rule_groups: dict[int, list[RuleDecl]] = {}
    for r in rules.rules:
        if r.head.pred in needed:
            rule_groups.setdefault(rules.strata.get(r.head.pred, 0), []).append(r)

    for level in range(rules.max_stratum() + 1):
        clauses: list[frozenset] = []
        for raw in _ground_rule_clauses(rules, rule_groups.get(level, []), domain):
            satisfied = False
            open_lits = set()
            for l in raw:
                atom = l.atom
                decided = rules.strata.get(l.pred, 0) < level or atom in base.facts
                if decided:
                    if (atom in proven) != l.negated:
                        satisfied = True
                        break
                else:
                    open_lits.add(l)
            if satisfied:
                continue
            if not open_lits:
                raise RuntimeError("ground rules contradict the base facts")
            clauses.append(frozenset(open_lits))
        for fact in base.sorted():
            if rules.strata.get(fact.pred, 0) == level:
                clauses.append(frozenset([fact]))

        for d in sorted(strata_preds.get(level, []), key=lambda d: d.name):
            for combo in product(domain, repeat=d.arity):
                atom = Literal(d.name, combo)
                if atom not in proven and _propositional_refute(clauses, atom):
                    proven.add(atom)

    truth = True
    for c in q.conjuncts:
        if c.pred == "=":
            a, b = c.args
            holds = (a == b)
        else:
            holds = c.atom in proven
        if holds == c.negated:
            truth = False
            break
    return Answer(truth, ({},) if truth else ())
