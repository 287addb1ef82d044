"""
Calibrating the rejection threshold
===================================

The benchmark uses one fixed threshold for everything. It is chosen on
the correctly classified samples of a clean calibration set so that a
target fraction of them (95% by default) is accepted; every other
dataset is then judged against that same bar.
"""

import numpy as np

from robeval import metrics

rng = np.random.default_rng(0)

# pretend these are msp confidences of 500 correctly classified clean
# samples: mostly high, with a low tail
conf = np.clip(rng.beta(8.0, 1.5, 500), 0.0, 1.0)

for q in (0.95, 0.99):
    t = metrics.calibrate_threshold(conf, q)
    print(f"target {q:.2f}: threshold {t.value:.4f}, "
          f"achieved accept rate {t.achieved_accept_rate:.4f} over n={t.n_calibration}")

# note the direction: accepting 99% needs a *lower* bar than accepting
# 95%, so more of everything (including unknown data) gets through

# the accept/reject decision combines with correctness into a confusion
# count; unknown-type data has no correct class, so acceptance itself is
# the error there
threshold = metrics.calibrate_threshold(conf, 0.95).value
known_conf = rng.beta(5.0, 2.0, 200)
known_correct = rng.random(200) < 0.8
outcomes = [
    metrics.Outcome(accepted=c >= threshold, correct=bool(k))
    for c, k in zip(known_conf, known_correct)
]
counts = metrics.confusion_counts(outcomes, is_unknown=False)
print()
print("known-type counts:", counts)
print(f"DAR {metrics.dar(counts):.2f}  DER {metrics.der(counts):.2f}  (always sums to 100)")

unknown_conf = rng.beta(2.0, 4.0, 200)
outcomes = [metrics.Outcome(accepted=c >= threshold) for c in unknown_conf]
counts = metrics.confusion_counts(outcomes, is_unknown=True)
print("unknown-type counts:", counts)
print(f"DAR {metrics.dar(counts):.2f}")

# the older binary view: can the score separate known from unknown at
# all, ignoring classification correctness
print()
print(f"AUROC      {metrics.auroc(known_conf, unknown_conf):.4f}")
print(f"AUPR       {metrics.aupr(known_conf, unknown_conf):.4f}")
print(f"FPR@95%TPR {metrics.fpr_at_tpr(known_conf, unknown_conf, 0.95):.4f}")
