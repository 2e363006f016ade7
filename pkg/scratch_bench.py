"""Throwaway pilot: benchmark-shaped run to tune dataset/attack behavior."""
import time

import numpy as np

from skelattack import (
    AttackConfig, AttackStrategy, ClassifierSpec, DatasetSpec, LossWeights,
    accuracy, attack_batch, forward, generate_dataset, predicted_label,
    split_dataset, train, transfer_attack,
)

t0 = time.time()
spec = DatasetSpec()  # defaults: 8 classes x 50, 64 frames, noise 0.02, seed 0
ds = split_dataset(generate_dataset(spec), seed=0)
print(f"dataset: {len(ds.motions)} motions in {time.time()-t0:.1f}s")

train_set, val_set, test_set = ds.subset("train"), ds.subset("val"), ds.subset("test")
print("split sizes:", len(train_set), len(val_set), len(test_set))

t0 = time.time()
mlp_spec = ClassifierSpec(architecture="mlp", class_count=8, seed=7)
params = train(mlp_spec, train_set, val_set)
print(f"train {time.time()-t0:.1f}s meta:", params.metadata)
test_acc = accuracy(params, test_set)
print("test acc:", test_acc)

lin_spec = ClassifierSpec(architecture="linear", class_count=8, seed=7)
lin = train(lin_spec, train_set, val_set)
print("linear meta:", lin.metadata, "test acc:", accuracy(lin, test_set))

correct = [m for m in test_set if predicted_label(forward(params, m)) == m.label]
print("correctly classified test motions:", len(correct))

cfg = AttackConfig()
for label, strat in [("AB", AttackStrategy.ab()), ("AB3", AttackStrategy.abn(3)),
                     ("AB5", AttackStrategy.abn(5))]:
    t0 = time.time()
    items, summary = attack_batch(correct, params, strat, cfg)
    print(f"{label}: rate={summary.success_rate:.3f} mean_it={summary.mean_iterations} "
          f"mean_lp={summary.mean_perceptual_loss:.2e} ({time.time()-t0:.1f}s)")

# SA with uniformly random fake targets
rng_targets = [
    AttackStrategy.sa(int(np.random.default_rng([0, i]).choice(
        [c for c in range(8) if c != m.label])))
    for i, m in enumerate(correct)
]
t0 = time.time()
items, summary = attack_batch(correct, params, rng_targets, cfg)
print(f"SA(random): rate={summary.success_rate:.3f} ({time.time()-t0:.1f}s)")

# w ordering on a subset
sub = correct[:30]
for w in (1.0, 0.4, 0.05):
    c = AttackConfig(weights=LossWeights(w=w))
    _, s = attack_batch(sub, params, AttackStrategy.ab(), c)
    print(f"w={w}: rate={s.success_rate:.3f}")

# transfer: mlp seed 7 -> mlp seed 8, linear seed 7
t0 = time.time()
params_b = train(ClassifierSpec(architecture="mlp", class_count=8, seed=8), train_set, val_set)
print("target mlp seed8 test acc:", accuracy(params_b, test_set))
rep = transfer_attack(params, [params, params_b, lin], correct, AttackStrategy.ab(), cfg)
for t in rep.targets:
    print(f"AB transfer -> {t.target_id}: rate={t.transfer_success_rate} "
          f"baseline={t.baseline_success_rate} evaluated={t.evaluated}")
rep5 = transfer_attack(params, [params_b, lin], correct, AttackStrategy.abn(5), cfg)
for t in rep5.targets:
    print(f"AB5 transfer -> {t.target_id}: rate={t.transfer_success_rate} "
          f"baseline={t.baseline_success_rate} evaluated={t.evaluated}")
print(f"transfer eval {time.time()-t0:.1f}s")
