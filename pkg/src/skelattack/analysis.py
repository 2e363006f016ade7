"""Vulnerability statistics over attack results.

Joint "perturbation" here is the per-frame Euclidean displacement magnitude
of each joint between the adversarial and the clean motion.  Series are
pooled over frames and samples into one long observation vector per joint
before correlating; speed/acceleration series are the magnitudes of the
clean motion's first/second forward differences, aligned with the leading
frame of each difference window (the displacement series is truncated to the
derivative's length).

Zero-variance series (max == min, i.e. mathematically constant) make Pearson
correlation undefined; those cells carry ``NaN`` in the matrices and
``False`` in the validity masks instead of propagating NaN arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .attack import AttackResult
from .errors import EmptyInputError, SampleRejectedError, ValidationError
from .motion import Motion


@dataclass
class CorrelationReport:
    """Pearson matrices (J x J) plus per-cell validity masks."""

    disp_disp: np.ndarray
    disp_speed: np.ndarray
    disp_accel: np.ndarray
    valid_disp_disp: np.ndarray
    valid_disp_speed: np.ndarray
    valid_disp_accel: np.ndarray
    sample_count: int


@dataclass
class DeviationStats:
    """Per-joint mean / population standard deviation of the displacement
    magnitudes, pooled over frames and samples."""

    mean: np.ndarray
    std: np.ndarray


def joint_displacement_series(result: AttackResult) -> np.ndarray:
    """Per-joint displacement magnitude over time, shape (J, M)."""
    if not result.success:
        raise SampleRejectedError(
            "displacement analysis is defined on successful attacks only"
        )
    return np.linalg.norm(result.displacement, axis=2).T


def _successful_pairs(results, originals):
    if len(results) != len(originals):
        raise ValidationError(
            f"{len(results)} results for {len(originals)} originals"
        )
    pairs = [
        (r, o)
        for r, o in zip(results, originals)
        if r is not None and r.success
    ]
    if not pairs:
        raise EmptyInputError("no successful attacks")
    return pairs


def _normalize_rows(series: np.ndarray):
    """Center and unit-normalize rows; flag rows with genuinely zero variance."""
    if series.shape[1] < 2:
        return np.zeros_like(series), np.zeros(series.shape[0], dtype=bool)
    valid = np.ptp(series, axis=1) > 0.0
    centered = series - series.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    safe = np.where(valid & (norms > 0.0), norms, 1.0)
    return centered / safe[:, None], valid & (norms > 0.0)


def _cross_correlation(a: np.ndarray, b: np.ndarray):
    a_norm, a_valid = _normalize_rows(a)
    b_norm, b_valid = _normalize_rows(b)
    c = a_norm @ b_norm.T
    np.clip(c, -1.0, 1.0, out=c)
    valid = np.outer(a_valid, b_valid)
    c[~valid] = np.nan
    return c, valid


def _self_correlation(a: np.ndarray):
    a_norm, a_valid = _normalize_rows(a)
    c = a_norm @ a_norm.T
    c = 0.5 * (c + c.T)  # force exact symmetry
    np.clip(c, -1.0, 1.0, out=c)
    valid = np.outer(a_valid, a_valid)
    c[~valid] = np.nan
    idx = np.flatnonzero(a_valid)
    c[idx, idx] = 1.0
    return c, valid


def _speed_magnitudes(motion: Motion, order: int) -> np.ndarray:
    """(J, M - order) magnitude of the clean motion's order-n differences."""
    return np.linalg.norm(np.diff(motion.positions, n=order, axis=0), axis=2).T


def correlation_report(
    results: Sequence[AttackResult], originals: Sequence[Motion]
) -> CorrelationReport:
    """Displacement-displacement / -speed / -acceleration Pearson matrices.

    Cell (j, k) of ``disp_speed`` correlates joint j's displacement series
    with joint k's clean speed series; ``disp_accel`` uses the second
    difference.  Cells touching a zero-variance series are masked invalid.
    """
    pairs = _successful_pairs(results, originals)

    disp_full, disp_1, disp_2, speeds, accels = [], [], [], [], []
    for result, original in pairs:
        disp = joint_displacement_series(result)
        disp_full.append(disp)
        disp_1.append(disp[:, : disp.shape[1] - 1])
        speeds.append(_speed_magnitudes(original, 1))
        if disp.shape[1] >= 3:
            disp_2.append(disp[:, : disp.shape[1] - 2])
            accels.append(_speed_magnitudes(original, 2))

    disp_pool = np.hstack(disp_full)
    disp_disp, valid_dd = _self_correlation(disp_pool)
    disp_speed, valid_ds = _cross_correlation(np.hstack(disp_1), np.hstack(speeds))
    if accels:
        disp_accel, valid_da = _cross_correlation(np.hstack(disp_2), np.hstack(accels))
    else:
        j = disp_pool.shape[0]
        disp_accel = np.full((j, j), np.nan)
        valid_da = np.zeros((j, j), dtype=bool)
    return CorrelationReport(
        disp_disp=disp_disp,
        disp_speed=disp_speed,
        disp_accel=disp_accel,
        valid_disp_disp=valid_dd,
        valid_disp_speed=valid_ds,
        valid_disp_accel=valid_da,
        sample_count=len(pairs),
    )


def deviation_stats(results: Sequence[AttackResult]) -> DeviationStats:
    """Mean and population std of each joint's pooled displacement magnitudes."""
    series = [
        joint_displacement_series(r)
        for r in results
        if r is not None and r.success
    ]
    if not series:
        raise EmptyInputError("no successful attacks")
    pooled = np.hstack(series)
    return DeviationStats(
        mean=pooled.mean(axis=1),
        std=pooled.std(axis=1),
    )


# ---------------------------------------------------------------------------
# CSV emission


def write_correlation_csv(matrix, valid, joint_names, path) -> None:
    """J x J matrix with a joint-name header row/column; invalid cells empty."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["joint"] + list(joint_names))
        for j, name in enumerate(joint_names):
            row = [name]
            for k in range(len(joint_names)):
                row.append(repr(float(matrix[j, k])) if valid[j, k] else "")
            writer.writerow(row)


def write_deviation_csv(stats: DeviationStats, joint_names, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["joint", "mean_displacement", "std_displacement"])
        for name, mean, std in zip(joint_names, stats.mean, stats.std):
            writer.writerow([name, repr(float(mean)), repr(float(std))])


def write_report_csvs(
    report: CorrelationReport,
    stats: DeviationStats,
    joint_names,
    out_dir,
) -> list[Path]:
    """Emit the three correlation matrices plus the deviation table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        ("disp_disp.csv", report.disp_disp, report.valid_disp_disp),
        ("disp_speed.csv", report.disp_speed, report.valid_disp_speed),
        ("disp_accel.csv", report.disp_accel, report.valid_disp_accel),
    ]
    paths = []
    for name, matrix, valid in tasks:
        path = out / name
        write_correlation_csv(matrix, valid, joint_names, path)
        paths.append(path)
    stats_path = out / "deviation_stats.csv"
    write_deviation_csv(stats, joint_names, stats_path)
    paths.append(stats_path)
    return paths
