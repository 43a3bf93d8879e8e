"""
Logic basics: terms, unification, and clause form
=================================================

The knowledge engine represents everything as first-order literals over
constants (vehicle01, White) and variables (x, y).  This script walks
through the value types and the two core operations every other layer
builds on: unification and CNF conversion.
"""

from scenelogic import Const, Literal, Var, apply, to_cnf, unify
from scenelogic.logicpad import format_statement, parse_fol_expr

x, y = Var("x"), Var("y")

# A ground literal and a pattern with one variable.
pattern = Literal("GettingCloser", (Const("vehicle01"), y))
fact = Literal("GettingCloser", (Const("vehicle01"), Const("pedestrian01")))

subst = unify(pattern, fact)
print("unifier:", {str(k): str(v) for k, v in subst.items()})
print("applied:", apply(subst, pattern))

# Statements are written in a small text syntax; function equality like
# ColOf(x) = White normalizes to the relation ColOfRel(x, White).
statement = parse_fol_expr(
    "forall x: (Vehicle(x) & !SpeedUp(x) & !SpeedDown(x)) -> ConstantSpeed(x)"
)
print("\nstatement:", format_statement(statement))

for clause in to_cnf(statement):
    print("clause:   ", clause)

# Tautologies vanish during conversion.
print("\ntautology clauses:", to_cnf(parse_fol_expr("forall x: Moves(x) -> Moves(x)")))
