"""Inference engine: stratified saturation, query resolution, proof traces,
and the differential against the naive oracle."""

import random

import pytest

from scenelogic.fol import And, Const, Implies, Literal, Statement, Var
from scenelogic.inference import (
    DepthExceeded,
    FactSet,
    NonGroundQuery,
    ProofTrace,
    Query,
    TraceStep,
    brute_force_models,
    check_trace,
    resolve,
    saturate,
)
from scenelogic.logicpad import (
    PredicateDecl,
    RuleDecl,
    RuleSet,
    UnknownPredicate,
    stratify,
)

x, y = Var("x"), Var("y")


def lit(pred, *names, neg=False):
    return Literal(pred, tuple(Const(n) if isinstance(n, str) else n for n in names), neg)


def facts(*lits):
    return FactSet.of(lits)


# ---------------------------------------------------------------------------
# saturate
# ---------------------------------------------------------------------------

def test_vehicle_without_speed_changes_holds_constant_speed(rules):
    sat = saturate(facts(lit("Vehicle", "vehicle01")), rules)
    assert lit("ConstantSpeed", "vehicle01") in sat


def test_moving_pedestrian_walks(rules):
    sat = saturate(facts(lit("Pedestrian", "p01"), lit("Moves", "p01")), rules)
    assert lit("Walk", "p01") in sat
    assert lit("Stand", "p01") not in sat


def test_empty_base_saturates_to_empty(rules):
    sat = saturate(FactSet.of([]), rules)
    assert len(sat) == 0 and sat.trace.steps == ()


def test_saturate_records_one_step_per_derived_fact(rules):
    base = facts(lit("Vehicle", "v"), lit("SpeedUp", "v"))
    sat = saturate(base, rules)
    derived = sat.facts - base.facts
    assert {s.derived for s in sat.trace.steps} == derived
    assert len(sat.trace.steps) == len(derived)


def test_depth_bound_guards_runaway_rulesets(rules):
    base = facts(lit("Vehicle", "vehicle01"))
    with pytest.raises(DepthExceeded):
        saturate(base, rules, depth_bound=0)


# ---------------------------------------------------------------------------
# resolve
# ---------------------------------------------------------------------------

def _fig3_base():
    return facts(
        lit("Vehicle", "vehicle01"),
        lit("TypeOfRel", "vehicle01", "Car"),
        lit("ColOfRel", "vehicle01", "White"),
        lit("AtCenter", "vehicle01"),
        lit("Moves", "vehicle01"),
    )


def test_paper_query_resolves_to_vehicle01(rules):
    q = Query((
        lit("TypeOfRel", x, "Car"),
        lit("ColOfRel", x, "White"),
        lit("AtCenter", x),
        lit("ConstantSpeed", x),
    ))
    a = resolve(_fig3_base(), rules, q)
    assert a.truth and a.bindings == ({x: Const("vehicle01")},)


def test_binding_enumeration_is_sorted(rules):
    base = facts(
        lit("Vehicle", "bbb"), lit("Vehicle", "aaa"), lit("Vehicle", "ccc"),
    )
    a = resolve(base, rules, Query((lit("Vehicle", x),)))
    assert [s[x].name for s in a.bindings] == ["aaa", "bbb", "ccc"]


def test_query_over_empty_factset_is_false(rules):
    a = resolve(FactSet.of([]), rules, Query((lit("GettingCloser", "vehicle01", y),)))
    assert not a.truth and a.bindings == ()


def test_negated_conjunct_is_closed_world(rules):
    base = facts(lit("Vehicle", "v1"), lit("Vehicle", "v2"), lit("Moves", "v2"))
    a = resolve(base, rules, Query((lit("Vehicle", x), lit("Moves", x, neg=True))))
    assert [s[x].name for s in a.bindings] == ["v1"]


def test_negated_conjunct_with_free_variable_means_no_grounding(rules):
    base = facts(
        lit("Vehicle", "v1"), lit("Vehicle", "v2"),
        lit("DistanceDecreases", "v1", "v2"),
    )
    # Vehicles that are getting closer to nothing at all.
    a = resolve(base, rules, Query((lit("Vehicle", x), lit("GettingCloser", x, y, neg=True))))
    assert [s[x].name for s in a.bindings] == ["v2"]


def test_unknown_predicate_rejected(rules):
    with pytest.raises(UnknownPredicate):
        resolve(FactSet.of([]), rules, Query((lit("Flying", x),)))


def test_resolve_is_deterministic(rules):
    base = _fig3_base()
    q = Query((lit("Vehicle", x),))
    a1, a2 = resolve(base, rules, q), resolve(base, rules, q)
    assert a1.bindings == a2.bindings
    assert [str(s) for s in a1.trace.steps] == [str(s) for s in a2.trace.steps]


def test_ground_true_query_yields_one_empty_binding(rules):
    a = resolve(_fig3_base(), rules, Query((lit("Moves", "vehicle01"),)))
    assert a.truth and a.bindings == ({},)


# ---------------------------------------------------------------------------
# check_trace
# ---------------------------------------------------------------------------

def test_trace_from_saturation_checks_out(rules):
    base = facts(lit("Vehicle", "v"), lit("SpeedUp", "v"))
    sat = saturate(base, rules)
    assert check_trace(sat.trace, base, rules)


def test_trace_with_missing_premise_fails(rules):
    bogus = ProofTrace((
        TraceStep(lit("Accelerate", "v"), "accelerate",
                  (lit("Vehicle", "v"), lit("SpeedUp", "v"))),
    ))
    assert not check_trace(bogus, FactSet.of([lit("Vehicle", "v")]), rules)


def test_trace_with_wrong_rule_name_fails(rules):
    base = facts(lit("Vehicle", "v"), lit("SpeedUp", "v"))
    bogus = ProofTrace((
        TraceStep(lit("Accelerate", "v"), "no_such_rule",
                  (lit("Vehicle", "v"), lit("SpeedUp", "v"))),
    ))
    assert not check_trace(bogus, base, rules)


def test_empty_trace_is_valid(rules):
    assert check_trace(ProofTrace(), _fig3_base(), rules)


def test_trace_where_head_does_not_follow_fails(rules):
    base = facts(lit("Vehicle", "v"), lit("SpeedUp", "v"))
    bogus = ProofTrace((
        TraceStep(lit("Accelerate", "w"), "accelerate",
                  (lit("Vehicle", "v"), lit("SpeedUp", "v"))),
    ))
    assert not check_trace(bogus, base, rules)


# ---------------------------------------------------------------------------
# Random stratified rulesets for differential testing
# ---------------------------------------------------------------------------

def random_ruleset_and_base(rng: random.Random, max_consts=5, max_preds=6):
    """A random stratified program plus a random ground base."""
    n_preds = rng.randint(2, max_preds)
    arities = {f"P{i}": rng.randint(1, 2) for i in range(n_preds)}
    levels = {p: rng.choice((0, 0, 1, 2)) for p in arities}
    levels["P0"] = 0  # keep at least one atomic predicate for base facts
    consts = [Const(c) for c in "abcde"[: rng.randint(1, max_consts)]]
    variables = [Var(v) for v in "xyz"]

    decls = tuple(
        PredicateDecl(p, arities[p], "atomic" if levels[p] == 0 else "derived")
        for p in sorted(arities)
    )

    def atom(pred, neg):
        args = tuple(rng.choice(variables + consts) for _ in range(arities[pred]))
        return Literal(pred, args, neg)

    rule_decls = []
    for p in sorted(arities):
        if levels[p] == 0:
            continue
        for k in range(rng.randint(1, 2)):
            body = []
            for _ in range(rng.randint(1, 3)):
                q = rng.choice([r for r in arities if levels[r] <= levels[p]])
                neg = levels[q] < levels[p] and rng.random() < 0.4
                body.append(atom(q, neg))
            head = atom(p, False)
            st = Statement(
                tuple(("forall", v) for v in variables),
                Implies(And(tuple(body)) if len(body) > 1 else body[0], head),
            )
            rule_decls.append(RuleDecl(f"{p}_r{k}", st, head, tuple(body)))

    strata = stratify(decls, tuple(rule_decls))
    rs = RuleSet(decls, (), tuple(rule_decls), strata)

    base_lits = set()
    for _ in range(rng.randint(0, 8)):
        p = rng.choice([q for q in arities if levels[q] == 0])
        base_lits.add(Literal(p, tuple(rng.choice(consts) for _ in range(arities[p]))))
    return rs, FactSet.of(base_lits)


def test_saturate_agrees_with_brute_force_on_random_kbs(rules):
    rng = random.Random(20240817)
    for _ in range(150):
        rs, base = random_ruleset_and_base(rng)
        assert saturate(base, rs).facts == brute_force_models(base, rs).facts


def test_single_fact_sweep_matches_brute_force(rules):
    for d in rules.atomic_predicates():
        args = tuple(Const(f"c{k}") for k in range(d.arity))
        base = facts(Literal(d.name, args))
        assert saturate(base, rules).facts == brute_force_models(base, rules).facts


def test_monotone_within_stratum():
    rng = random.Random(7)
    grew = 0
    for _ in range(60):
        rs, base = random_ruleset_and_base(rng)
        if not base.facts:
            continue
        before = saturate(base, rs).facts
        zero_preds = [d.name for d in rs.declarations if rs.strata[d.name] == 0]
        pred = rng.choice(zero_preds)
        extra = Literal(pred, tuple(Const("a") for _ in range(rs.arity(pred))))
        after = saturate(FactSet.of(base.facts | {extra}), rs).facts
        # Facts at or below the added fact's stratum survive.
        kept = {f for f in before if rs.strata[f.pred] <= rs.strata[extra.pred]}
        assert kept <= after
        # Purely positive programs are monotone outright.
        if not any(l.negated for r in rs.rules for l in r.body):
            assert before <= after
            grew += 1
    assert grew > 0


def test_brute_force_guards_size(rules):
    base = facts(*[lit("Vehicle", f"v{i:02d}") for i in range(30)])
    from scenelogic.inference import OracleTooLarge
    with pytest.raises(OracleTooLarge):
        brute_force_models(base, rules, max_atoms=100)


def test_brute_force_of_empty_base_is_empty(rules):
    assert brute_force_models(FactSet.of([]), rules).facts == frozenset()


def test_exactly_the_approaching_object_binds(rules):
    # Parked vehicle, one pedestrian walking toward it: the only thing the
    # vehicle is getting closer to is that pedestrian.
    from scenelogic.facts import compile_window
    from scenelogic.scenarios import ScenarioSpec, generate_scenario
    from scenelogic.scene import windows
    from scenelogic.tracking import link_window

    sc = generate_scenario(ScenarioSpec("approach", seed=6))
    w = windows(sc.sequence, 10)[0]
    wf = compile_window(w, link_window(w, "oracle"), rules=rules)
    a = resolve(wf.facts, rules, Query((lit("GettingCloser", "vehicle01", y),)))
    assert a.truth
    assert [str(s[y]) for s in a.bindings] == ["pedestrian01"]


def test_every_derived_fact_has_a_checkable_trace(rules):
    from scenelogic.facts import compile_window
    from scenelogic.scenarios import KINDS, ScenarioSpec, generate_scenario
    from scenelogic.scene import windows
    from scenelogic.tracking import link_window

    for kind in KINDS:
        sc = generate_scenario(ScenarioSpec(kind, seed=31))
        w = windows(sc.sequence, 10)[0]
        wf = compile_window(w, link_window(w, "oracle"), rules=rules)
        sat = saturate(wf.facts, rules)
        assert {s.derived for s in sat.trace.steps} == sat.facts - wf.facts.facts
        assert check_trace(sat.trace, wf.facts, rules), kind


# ---------------------------------------------------------------------------
# Resolution-refutation mode
# ---------------------------------------------------------------------------

def test_resolution_mode_matches_chaining_on_ground_queries(rules):
    base = _fig3_base()
    for query in (
        Query((lit("ConstantSpeed", "vehicle01"),)),
        Query((lit("Accelerate", "vehicle01"),)),
        Query((lit("Moves", "vehicle01"),)),
        Query((lit("Vehicle", "vehicle01"), lit("SpeedUp", "vehicle01", neg=True))),
    ):
        chain = resolve(base, rules, query)
        refut = resolve(base, rules, query, method="resolution")
        assert chain.truth == refut.truth


def test_resolution_mode_differential_on_random_kbs():
    rng = random.Random(99)
    checked = 0
    for _ in range(40):
        rs, base = random_ruleset_and_base(rng, max_consts=3, max_preds=4)
        sat = saturate(base, rs)
        for d in rs.declarations:
            for combo_i in range(min(3, 3 ** d.arity)):
                args = tuple(Const(rng.choice("abc")) for _ in range(d.arity))
                q = Query((Literal(d.name, args),))
                expected = Literal(d.name, args) in sat
                got = resolve(base, rs, q, method="resolution").truth
                assert got == expected, f"{d.name}{args} expected {expected}"
                checked += 1
    assert checked > 100


def test_resolution_mode_rejects_open_queries(rules):
    with pytest.raises(NonGroundQuery):
        resolve(_fig3_base(), rules, Query((lit("Vehicle", x),)), method="resolution")
