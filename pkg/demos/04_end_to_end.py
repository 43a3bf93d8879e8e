"""
End to end: annotations in, answers and context out
===================================================

Generate a synthetic scenario with ground-truth QA, run the full pipeline
(track, compile facts, saturate, answer), score it, and export the two
retrieval-context flavors an external language model would receive.
"""

from scenelogic import default_ruleset, run_pipeline
from scenelogic.scenarios import ScenarioSpec, generate_scenario

rules = default_ruleset()
scenario = generate_scenario(ScenarioSpec("approach", seed=21))

print(f"scenario: {scenario.spec.kind}, seed {scenario.spec.seed}")
print(f"gold facts: {len(scenario.gold_atomic)} atomic, "
      f"{len(scenario.gold_derived)} derived")

result = run_pipeline(scenario.sequence, rules, scenario.qa,
                      track_mode="inferred", export_context="c2")

print("\nquestions:")
for item, answer in zip(scenario.qa, result.answers):
    mark = "ok" if answer == item.gold else "WRONG"
    print(f"  [{item.category}] {item.question}  ->  {answer} ({mark})")

agg = result.report.aggregate
print(f"\naccuracy {agg.accuracy:.2f}, f1 {agg.f1:.2f} over {agg.n} questions")

# One exported context payload: verdict plus only the sentences the proof
# used (condition "with inference").
item, payload = result.payloads[-2]
print(f"\ncontext payload for: {payload.question}")
print(payload.retrieved)
