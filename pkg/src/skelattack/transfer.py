"""Black-box attack via transferability.

Adversarial samples are computed by white-box attacks on a surrogate
classifier; only the samples that succeed on the surrogate are then replayed
against each target classifier, which is queried through ``forward`` alone
(never through its gradients).  A magnitude-matched Gaussian-noise baseline
is evaluated alongside to separate genuine transferability from plain noise
sensitivity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .attack import (
    AttackConfig,
    AttackItem,
    AttackResult,
    AttackStrategy,
    attack_batch,
    strategy_success,
)
from .errors import ValidationError
from .models import ClassifierParams, forward, model_id
from .motion import SCHEMA_VERSION, Motion


@dataclass
class TargetTransferResult:
    """Transfer outcome of one surrogate's samples on one target."""

    target_id: str
    evaluated: int
    transfer_successes: int
    transfer_success_rate: float | None
    baseline_successes: int
    baseline_success_rate: float | None


@dataclass
class TransferReport:
    surrogate_id: str
    strategy: str
    count: int
    white_box_successes: int
    white_box_success_rate: float | None
    targets: list[TargetTransferResult]


def _check_class_counts(surrogate, targets):
    k = surrogate.spec.class_count
    for t in targets:
        if t.spec.class_count != k:
            raise ValidationError(
                f"class counts differ: surrogate has {k}, target "
                f"{model_id(t)} has {t.spec.class_count}"
            )


def evaluate_on_target(
    target: ClassifierParams, results: Sequence[AttackResult]
) -> int:
    """Count samples whose own success predicate holds under the target."""
    wins = 0
    for r in results:
        dist = forward(target, r.adversarial_motion)
        if strategy_success(r.strategy, r.original_label, dist):
            wins += 1
    return wins


def noise_matched_motion(result: AttackResult, rng: np.random.Generator) -> Motion:
    """Clean motion plus Gaussian noise scaled to the sample's RMS displacement."""
    adv = result.adversarial_motion
    clean_pos = adv.positions - result.displacement
    disp_rms = float(np.sqrt(np.mean(result.displacement**2)))
    noise = rng.standard_normal(adv.positions.shape)
    if disp_rms > 0.0:
        noise *= disp_rms / np.sqrt(np.mean(noise**2))
    else:
        noise[:] = 0.0
    return adv.with_positions(clean_pos + noise)


def evaluate_noise_baseline(
    target: ClassifierParams,
    items: Sequence[AttackItem],
    seed: int,
) -> int:
    """Same predicate, but on magnitude-matched random perturbations.

    Noise is drawn per item from ``(seed, item index)`` so the count does not
    depend on evaluation order.
    """
    wins = 0
    for item in items:
        r = item.result
        rng = np.random.default_rng([seed, item.index])
        noisy = noise_matched_motion(r, rng)
        dist = forward(target, noisy)
        if strategy_success(r.strategy, r.original_label, dist):
            wins += 1
    return wins


def transfer_attack(
    surrogate: ClassifierParams,
    targets: Sequence[ClassifierParams],
    motions: Sequence[Motion],
    strategy: AttackStrategy | Sequence[AttackStrategy],
    cfg: AttackConfig | None = None,
    ids: Sequence[str] | None = None,
) -> TransferReport:
    """White-box attack on the surrogate, replay on every target."""
    cfg = cfg or AttackConfig()
    _check_class_counts(surrogate, targets)
    items, summary = attack_batch(motions, surrogate, strategy, cfg, ids=ids)
    wins = [i for i in items if i.result is not None and i.result.success]
    win_results = [i.result for i in wins]

    per_target = []
    for target in targets:
        transferred = evaluate_on_target(target, win_results)
        baseline = evaluate_noise_baseline(target, wins, cfg.seed)
        evaluated = len(wins)
        per_target.append(
            TargetTransferResult(
                target_id=model_id(target),
                evaluated=evaluated,
                transfer_successes=transferred,
                transfer_success_rate=transferred / evaluated if evaluated else None,
                baseline_successes=baseline,
                baseline_success_rate=baseline / evaluated if evaluated else None,
            )
        )
    label = (
        strategy.describe()
        if isinstance(strategy, AttackStrategy)
        else "per-item"
    )
    return TransferReport(
        surrogate_id=model_id(surrogate),
        strategy=label,
        count=summary.count,
        white_box_successes=summary.successes,
        white_box_success_rate=summary.success_rate,
        targets=per_target,
    )


# ---------------------------------------------------------------------------
# serialization


def report_to_dict(report: TransferReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "transfer_report",
        "surrogate_id": report.surrogate_id,
        "strategy": report.strategy,
        "count": report.count,
        "white_box_successes": report.white_box_successes,
        "white_box_success_rate": report.white_box_success_rate,
        "targets": [
            {
                "target_id": t.target_id,
                "evaluated": t.evaluated,
                "transfer_successes": t.transfer_successes,
                "transfer_success_rate": t.transfer_success_rate,
                "baseline_successes": t.baseline_successes,
                "baseline_success_rate": t.baseline_success_rate,
            }
            for t in report.targets
        ],
    }


def save_transfer_reports(out_dir, reports: Sequence[TransferReport]) -> list[Path]:
    """Write one JSON per report plus rate matrices (rows = surrogates,
    columns = targets)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for report in reports:
        path = out / f"transfer_{report.surrogate_id}.json"
        path.write_text(
            json.dumps(report_to_dict(report), sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )
        written.append(path)

    target_ids = [t.target_id for t in reports[0].targets] if reports else []
    for name, attr in (
        ("transfer_matrix.csv", "transfer_success_rate"),
        ("baseline_matrix.csv", "baseline_success_rate"),
    ):
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["surrogate"] + target_ids)
            for report in reports:
                row = [report.surrogate_id]
                rates = {t.target_id: getattr(t, attr) for t in report.targets}
                for tid in target_ids:
                    rate = rates.get(tid)
                    row.append("" if rate is None else repr(rate))
                writer.writerow(row)
        written.append(path)
    return written
