"""
Confidence scores from raw logits
=================================

Every rejection decision in the benchmark starts from a scalar
confidence computed on one logit vector. Four scores are available;
higher always means more confident. This walk-through compares them on
a few hand-picked vectors.
"""

import numpy as np

from robeval import scores

# a confident prediction, an ambiguous one, and a flat one
confident = np.array([8.0, 1.0, 0.5, -2.0])
ambiguous = np.array([2.0, 1.9, -1.0, -1.0])
flat = np.zeros(4)

print("vector      msp      mls      energy   gen")
for name, z in (("confident", confident), ("ambiguous", ambiguous), ("flat", flat)):
    row = [scores.confidence(z, m) for m in ("msp", "mls", "energy", "gen")]
    print(f"{name:<10}" + "".join(f" {v:8.4f}" for v in row))

# msp lives in (0, 1]: it is the largest softmax probability
print()
print("softmax of the ambiguous vector:", np.round(scores.softmax(ambiguous), 4))
print("predicted class:", scores.predicted_class(ambiguous))

# shifting every logit by a constant changes nothing for msp, while mls
# and energy move by exactly that constant: they keep the logit scale
shift = 10.0
print()
print("msp shift difference:   %.2e" % abs(scores.msp(confident + shift) - scores.msp(confident)))
print("mls shift difference:   %.2e" % abs(scores.mls(confident + shift) - (scores.mls(confident) + shift)))
print("energy shift difference: %.2e"
      % abs(scores.energy_confidence(confident + shift) - (scores.energy_confidence(confident) + shift)))

# the generalized-entropy score sums p^gamma (1-p)^gamma over the top-M
# probabilities and negates; a one-hot distribution scores 0, flatter
# ones score lower
print()
for m in (1, 2, 4):
    print(f"gen with top_m={m}: flat {scores.gen_confidence(flat, top_m=m):7.4f}   "
          f"confident {scores.gen_confidence(confident, top_m=m):7.4f}")

# all scores accept batches along the last axis
batch = np.stack([confident, ambiguous, flat])
print()
print("batched msp:", np.round(scores.msp(batch), 4))
