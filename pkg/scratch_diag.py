"""Throwaway: diagnose AB stalls vs model confidence."""
import numpy as np

from skelattack import (
    AttackConfig, AttackStrategy, ClassifierSpec, DatasetSpec,
    attack, forward, generate_dataset, predicted_label, split_dataset, train,
)

ds = split_dataset(generate_dataset(DatasetSpec()), seed=0)
train_set, val_set, test_set = ds.subset("train"), ds.subset("val"), ds.subset("test")
params = train(ClassifierSpec(architecture="mlp", class_count=8, seed=7), train_set, val_set)

correct = [m for m in test_set if predicted_label(forward(params, m)) == m.label]
conf = np.array([forward(params, m).max() for m in correct])
print("max-prob over correct test: min/median/mean/max:",
      conf.min().round(3), np.median(conf).round(3), conf.mean().round(3), conf.max().round(3))

cfg = AttackConfig(track_history=True)
rows = []
for m in correct[:40]:
    r = attack(m, params, AttackStrategy.ab(), cfg)
    p0 = forward(params, m).max()
    # how far did the iterates move?
    lc0 = r.history[0].classification_loss
    lc_end = r.history[-1].classification_loss
    disp = float(np.abs(r.displacement).max())
    rows.append((r.success, p0, lc0, lc_end, disp, r.iterations_used))
ok = [r for r in rows if r[0]]
bad = [r for r in rows if not r[0]]
print(f"success {len(ok)}, fail {len(bad)}")
print("success confidences:", sorted(round(r[1], 3) for r in ok))
print("fail confidences:", sorted(round(r[1], 3) for r in bad))
print("fail: lc start->end, max|disp|:")
for r in bad[:10]:
    print(f"  p0={r[1]:.4f} lc {r[2]:.6f} -> {r[3]:.6f}  max_disp={r[4]:.2e}")
