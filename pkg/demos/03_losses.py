"""Weak supervision through mapped label sets.

A dataset label only says "one of these universal classes"; the NLL+ loss
credits the summed posterior of the mapped set, so its gradient pushes all
mapped logits up in proportion to their current share and all other logits
down.  With singleton mappings it reduces to the ordinary cross entropy.
"""

import numpy as np

from unitax.losses import (
    aggregate_mask_max,
    nll_plus,
    nll_plus_grad,
    universal_posteriors,
)
from unitax.taxonomy import MappingSet

# four universal classes: truck, pickup, car, van
maps = MappingSet({
    "VIPER": {"truck": (0, 1)},           # truck label = truck or pickup
    "Vistas": {"car": (1, 2, 3)},         # car label = pickup, car, or van
})

logits = np.array([1.2, -0.3, 0.4, -1.0])
post = universal_posteriors(logits)
print("posteriors:", np.round(post, 4))

for label in (("VIPER", "truck"), ("Vistas", "car")):
    loss = nll_plus(logits, label, maps)
    grad = nll_plus_grad(logits, label, maps)
    print(f"\nlabel {label[0]}.{label[1]}")
    print("  nll+ loss:", round(loss, 4))
    print("  gradient: ", np.round(grad, 4))
    print("  in-label entries <= 0, rest > 0, sum =", round(float(grad.sum()), 12))

# singleton mapping == standard cross entropy
single = MappingSet({"D": {"c": (2,)}})
standard = -np.log(post[2])
print("\nsingleton nll+ == standard nll:",
      np.isclose(nll_plus(logits, ("D", "c"), single), standard))

# the mask-level alternative aggregates per-class maps by elementwise max
stack = np.array([
    [[0.9, 0.1], [0.2, 0.3]],   # truck map
    [[0.4, 0.8], [0.1, 0.2]],   # pickup map
    [[0.1, 0.2], [0.3, 0.9]],   # car map
    [[0.0, 0.1], [0.2, 0.1]],   # van map
])
merged, winners = aggregate_mask_max(stack, ("VIPER", "truck"), maps)
print("\nmax-aggregated truck map:\n", merged)
print("winning class per pixel:\n", winners)
