"""Throwaway pilot: validate gradients + FK before tuning the benchmark."""
import numpy as np

from skelattack import (
    AttackConfig, AttackStrategy, ClassifierSpec, DatasetSpec, JointAngleTrack,
    Motion, PerceptualConfig, attack_objective, bone_loss, dynamics_loss,
    forward, forward_kinematics, init_params, input_gradient, perceptual_loss,
    ab_loss, abn_loss, sa_loss, one_hot,
)
from skelattack.skeleton import DEFAULT_BONE_LENGTHS, DEFAULT_TOPOLOGY, bone_lengths_frames

rng = np.random.default_rng(42)


def rand_motion(m=6, scale=1.0, label=None):
    pos = rng.standard_normal((m, 25, 3)) * scale
    return Motion(positions=pos, label=label)


def fd_check(value_fn, grad, x, n_coords=30, h=1e-5, floor=1e-8):
    flat = x.ravel()
    idx = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
    worst = 0.0
    for i in idx:
        xp = flat.copy(); xp[i] += h
        xm = flat.copy(); xm[i] -= h
        fd = (value_fn(xp.reshape(x.shape)) - value_fn(xm.reshape(x.shape))) / (2 * h)
        g = grad.ravel()[i]
        rel = abs(g - fd) / max(abs(g), abs(fd), floor)
        worst = max(worst, rel)
    return worst


# --- FK bone-length constancy
track = JointAngleTrack(
    angles=rng.uniform(-0.7, 0.7, (20, 25, 3)),
    bone_lengths=DEFAULT_BONE_LENGTHS,
    root_translation=rng.standard_normal((20, 3)) * 0.2,
)
mo = forward_kinematics(track, DEFAULT_TOPOLOGY)
bl = bone_lengths_frames(mo.positions)
print("FK bone-length max dev:", np.abs(bl - DEFAULT_BONE_LENGTHS).max())

# --- motion loss gradients
clean = rand_motion()
adv = clean.positions + rng.standard_normal(clean.positions.shape) * 0.05
cfg = PerceptualConfig()

v, g = bone_loss(clean, clean.with_positions(adv))
print("bone fd:", fd_check(lambda p: bone_loss(clean, clean.with_positions(p))[0], g, adv))

v, g = dynamics_loss(clean, clean.with_positions(adv), cfg)
print("dyn fd:", fd_check(lambda p: dynamics_loss(clean, clean.with_positions(p), cfg)[0], g, adv))

v, g = perceptual_loss(clean, clean.with_positions(adv), cfg)
print("perc fd:", fd_check(lambda p: perceptual_loss(clean, clean.with_positions(p), cfg)[0], g, adv))

# --- distribution loss gradients (direct on distribution simplex interior)
def softmax(z):
    e = np.exp(z - z.max()); return e / e.sum()

p, r = softmax(rng.standard_normal(8)), softmax(rng.standard_normal(8))
for name, fn in [("ab", lambda rr: ab_loss(p, rr)), ("abn", abn_loss),
                 ("sa", lambda rr: sa_loss(one_hot(3, 8), rr))]:
    v, g = fn(r)
    flat = r.copy(); worst = 0
    for i in range(8):
        h = 1e-7
        rp = r.copy(); rp[i] += h
        rm = r.copy(); rm[i] -= h
        fd = (fn(rp)[0] - fn(rm)[0]) / (2 * h)
        worst = max(worst, abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-8))
    print(name, "dist fd:", worst)

# --- classifier input gradients
for arch in ("linear", "mlp"):
    spec = ClassifierSpec(architecture=arch, class_count=8, seed=1)
    params = init_params(spec)
    m = rand_motion(m=11)
    u = rng.standard_normal(8)
    g = input_gradient(params, m, u)
    worst = fd_check(
        lambda pos: float(forward(params, m.with_positions(pos)) @ u),
        g, m.positions, n_coords=40, h=1e-5)
    print(arch, "input grad fd:", worst)

# --- end-to-end attack objective gradients
for arch in ("linear", "mlp"):
    spec = ClassifierSpec(architecture=arch, class_count=8, seed=2)
    params = init_params(spec)
    m = rand_motion(m=9, label=None)
    adv = m.positions + rng.standard_normal(m.positions.shape) * 0.02
    for strat in (AttackStrategy.ab(), AttackStrategy.abn(3), AttackStrategy.sa(5)):
        total, lc, lp, grad = attack_objective(m, adv, params, strat)
        worst = fd_check(
            lambda p: attack_objective(m, p, params, strat)[0],
            grad, adv, n_coords=30, h=1e-5)
        print(arch, strat.describe(), "objective fd:", worst)
