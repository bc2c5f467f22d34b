"""Train small 2D classifiers under different label-space constructions.

Two phenomena show up even at toy scale:

  * a class that is never labeled standalone (pickup, at the intersection
    of two composite labels) is still learned by NLL+;
  * always-co-labeled siblings collapse: the shared class soaks up all
    predictions and the sibling logits die off.
"""

import numpy as np

from unitax import problems
from unitax.toyproblem import generate_toy, problem_from_dict
from unitax.training import (
    TrainConfig,
    dead_logit_report,
    per_class_accuracy,
    train,
    universal_accuracy,
)


def fit(problem, mode, epochs, seed=0):
    spec, tax, maps = problem_from_dict(problem)
    data = generate_toy(spec, maps)
    result = train(TrainConfig(mode=mode, epochs=epochs, seed=seed),
                   spec, tax, maps, data)
    return result, tax, data


print("=== intersection learning (pickup is never labeled standalone) ===")
for mode in ("universal-nll-plus", "universal-nll-max"):
    result, tax, data = fit(problems.intersection_problem(0), mode, 800)
    per_class = per_class_accuracy(result.space, result.model,
                                   data.test_points, data.test_universal)
    pickup = next(u.id for u in tax.classes if u.display_name == "pickup")
    print(f"  {mode:22s} pickup accuracy {per_class[pickup]:.3f}")

print("\n=== sibling collapse (rider co-labeled with bike and ped) ===")
result, tax, data = fit(problems.collapse_problem(0), "universal-nll-plus", 800)
report = dead_logit_report(result.space, result.model, data.test_points)
for u in tax.classes:
    flag = "DEAD" if report["dead"][u.id] else "live"
    print(f"  {u.display_name:6s} prediction frequency "
          f"{report['frequencies'][u.id]:.3f}  [{flag}]")

print("\n=== label-space construction ordering (two relabeled splits) ===")
problem = problems.two_split_problem(0)
for mode in ("universal-nll-plus", "partial-merge", "naive-concat"):
    result, tax, data = fit(problem, mode, 600)
    acc = universal_accuracy(result.space, result.model,
                             data.test_points, data.test_universal)
    print(f"  {mode:22s} universal accuracy {acc:.3f} "
          f"({result.space.k} logits)")
