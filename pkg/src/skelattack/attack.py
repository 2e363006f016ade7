"""White-box attack optimization on skeletal motions.

Starting from the clean motion, the loop repeatedly steps the perturbed
coordinates with Adam on the combined objective

    L = w * L_c(strategy) + (1 - w) * L_p(perceptual)

and tracks every iterate that satisfies the strategy's success predicate.
Among the successful iterates the one with the smallest perceptual loss is
returned; if none succeeds within the iteration budget the final iterate is
returned with ``success=False``.

Strategies:

* ``ab``     anything-but: the predicted label must change.
* ``abn:N``  anything-but-N: the original label must leave the top N.
* ``sa:C``   specified: the predicted label must become C.

The optimization is fully deterministic: no randomness enters the loop.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DivergenceError,
    NumericError,
    ParseError,
    SampleRejectedError,
    SkelAttackError,
    ValidationError,
)
from .losses import (
    LossWeights,
    PerceptualConfig,
    ab_loss,
    abn_loss,
    one_hot,
    perceptual_loss_positions,
    sa_loss,
)
from .models import (
    ClassifierParams,
    _forward_cache,
    _input_gradient_from_cache,
    predicted_label,
    top_n,
)
from .motion import SCHEMA_VERSION, Motion, load_motion, save_motion
from .optim import Adam

STRATEGY_KINDS = ("ab", "abn", "sa")

#: Magnitude (meters) of the one-off symmetry-breaking jitter folded into the
#: first update.  The anything-but objective has an exactly zero gradient at
#: the unperturbed start (its logit gradient is the difference of two
#: identical distributions), so without a nudge the optimizer can freeze on
#: the clean motion.  The value is float32-resolution noise on meter-scale
#: coordinates: far below any perceptual or bone-length tolerance.
COLD_START_JITTER = 1e-7


@dataclass(frozen=True)
class AttackStrategy:
    """One of the three attack goals; build via :meth:`ab`/:meth:`abn`/:meth:`sa`."""

    kind: str
    n: int | None = None
    target: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValidationError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "abn":
            if self.n is None or self.n < 1:
                raise ValidationError("abn strategy needs n >= 1")
        elif self.n is not None:
            raise ValidationError(f"{self.kind} strategy does not take n")
        if self.kind == "sa":
            if self.target is None or self.target < 0:
                raise ValidationError("sa strategy needs a target class index")
        elif self.target is not None:
            raise ValidationError(f"{self.kind} strategy does not take a target")

    @classmethod
    def ab(cls) -> "AttackStrategy":
        return cls(kind="ab")

    @classmethod
    def abn(cls, n: int) -> "AttackStrategy":
        return cls(kind="abn", n=n)

    @classmethod
    def sa(cls, target: int) -> "AttackStrategy":
        return cls(kind="sa", target=target)

    @classmethod
    def parse(cls, text: str) -> "AttackStrategy":
        """Parse ``"ab"``, ``"abn:N"`` or ``"sa:CLASS"``."""
        head, _, tail = text.partition(":")
        try:
            if head == "ab" and not tail:
                return cls.ab()
            if head == "abn":
                return cls.abn(int(tail))
            if head == "sa":
                return cls.sa(int(tail))
        except ValueError as exc:
            raise ValidationError(f"bad strategy argument in {text!r}") from exc
        raise ValidationError(
            f"unknown strategy {text!r}; expected ab, abn:N or sa:CLASS"
        )

    def describe(self) -> str:
        if self.kind == "abn":
            return f"abn:{self.n}"
        if self.kind == "sa":
            return f"sa:{self.target}"
        return "ab"


@dataclass(frozen=True)
class AttackConfig:
    """All attack hyperparameters.

    The learning rate defaults to the top of the recommended
    [0.0005, 0.005] range and stays constant (no schedule).  ``abn_early_stop``
    stops an ``abn`` run at the first success instead of continuing to look
    for a lower-perceptual-loss success.
    """

    learning_rate: float = 0.005
    max_iterations: int = 300
    weights: LossWeights = field(default_factory=LossWeights)
    perceptual: PerceptualConfig = field(default_factory=PerceptualConfig)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    track_history: bool = False
    abn_early_stop: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    total_loss: float
    classification_loss: float
    perceptual_loss: float
    success: bool


@dataclass
class AttackResult:
    """Outcome of one attack; ``adversarial_motion`` keeps the input's frame
    count, joint count, frame rate and topology."""

    success: bool
    iterations_used: int
    adversarial_motion: Motion
    final_label: int
    final_topn: list[int]
    final_classification_loss: float
    final_perceptual_loss: float
    final_total_loss: float
    displacement: np.ndarray
    original_label: int
    strategy: AttackStrategy
    history: list[IterationRecord] | None = None


def _validate_strategy(strategy: AttackStrategy, class_count: int):
    if strategy.kind == "abn" and strategy.n >= class_count:
        raise ValidationError(
            f"abn n={strategy.n} must be smaller than class_count={class_count}"
        )
    if strategy.kind == "sa" and strategy.target >= class_count:
        raise ValidationError(
            f"sa target {strategy.target} outside [0, {class_count})"
        )


def strategy_objective(strategy, clean_dist, adv_dist, class_count):
    """Classification loss value and its gradient w.r.t. ``adv_dist``."""
    if strategy.kind == "ab":
        return ab_loss(clean_dist, adv_dist)
    if strategy.kind == "abn":
        return abn_loss(adv_dist)
    return sa_loss(one_hot(strategy.target, class_count), adv_dist)


def strategy_success(strategy, original_label, adv_dist) -> bool:
    """The strategy's success predicate on a predictive distribution."""
    if strategy.kind == "ab":
        return predicted_label(adv_dist) != original_label
    if strategy.kind == "abn":
        return original_label not in top_n(adv_dist, strategy.n)
    return predicted_label(adv_dist) == strategy.target


def attack_objective(clean: Motion, adv_positions, params, strategy, cfg=None):
    """Full objective and its coordinate gradient at arbitrary positions.

    Returns ``(total, classification, perceptual, grad)``.  This is the same
    assembly the attack loop uses; exposed so the end-to-end gradient can be
    checked independently.
    """
    cfg = cfg or AttackConfig()
    _validate_strategy(strategy, params.spec.class_count)
    clean_dist, _ = _forward_cache(params, clean.positions)
    probs, cache = _forward_cache(params, adv_positions)
    l_c, g_dist = strategy_objective(
        strategy, clean_dist, probs, params.spec.class_count
    )
    l_p, g_p = perceptual_loss_positions(
        clean.positions, adv_positions, clean.topology, cfg.perceptual
    )
    w = cfg.weights.w
    total = w * l_c + (1.0 - w) * l_p
    grad = w * _input_gradient_from_cache(params, cache, g_dist) + (1.0 - w) * g_p
    return total, l_c, l_p, grad


def attack(
    m: Motion,
    params: ClassifierParams,
    strategy: AttackStrategy,
    cfg: AttackConfig | None = None,
    item_seed: int = 0,
) -> AttackResult:
    """Run the optimization against one motion.

    Preconditions: for ``ab``/``abn`` the motion must carry a label and the
    classifier must predict it (attacking what the model cannot recognize is
    meaningless); for ``sa`` any valid motion is accepted.  Raises
    :class:`SampleRejectedError` otherwise.

    Deterministic given ``(cfg.seed, item_seed)``; batch drivers pass the item
    index as ``item_seed`` so results are schedule-independent.
    """
    cfg = cfg or AttackConfig()
    k = params.spec.class_count
    _validate_strategy(strategy, k)

    clean_pos = m.positions
    clean_dist, _ = _forward_cache(params, clean_pos)
    y_pred = predicted_label(clean_dist)
    if strategy.kind in ("ab", "abn"):
        if m.label is None:
            raise SampleRejectedError(
                f"{strategy.kind} attack requires a labeled motion"
            )
        if m.label != y_pred:
            raise SampleRejectedError(
                f"classifier predicts {y_pred} but the label is {m.label}; "
                "only correctly classified motions can be attacked"
            )
    original_label = m.label if m.label is not None else y_pred

    topo = m.topology
    w = cfg.weights.w
    adv = clean_pos.copy()
    prev = adv
    adam = Adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    halved = False

    best_lp = None
    best_pos = None
    best_iter = 0
    history: list[IterationRecord] | None = [] if cfg.track_history else None

    it = 0
    while True:
        try:
            if not np.isfinite(adv).all():
                raise NumericError("iterate contains non-finite coordinates")
            probs, cache = _forward_cache(params, adv)
            l_c, g_dist = strategy_objective(strategy, clean_dist, probs, k)
            l_p, g_p = perceptual_loss_positions(clean_pos, adv, topo, cfg.perceptual)
            total = w * l_c + (1.0 - w) * l_p
            if not np.isfinite(total):
                raise NumericError("attack loss is non-finite")
        except NumericError as exc:
            if halved:
                raise DivergenceError(str(exc), iteration=it) from exc
            # One rescue attempt: roll back to the previous iterate, halve
            # the step, restart the Adam moments.
            adv = prev.copy()
            adam = Adam(
                adam.learning_rate * 0.5,
                cfg.adam_beta1,
                cfg.adam_beta2,
                cfg.adam_eps,
            )
            halved = True
            continue

        success = strategy_success(strategy, original_label, probs)
        if history is not None:
            history.append(IterationRecord(it, total, l_c, l_p, success))
        if success and (best_lp is None or l_p < best_lp):
            best_lp, best_pos, best_iter = l_p, adv.copy(), it
        if success and strategy.kind == "abn" and cfg.abn_early_stop:
            break
        if it >= cfg.max_iterations:
            break

        grad = w * _input_gradient_from_cache(params, cache, g_dist) + (1.0 - w) * g_p
        prev = adv
        adv = adv.copy()
        adam.step({"q": adv}, {"q": grad})
        it += 1

    if best_pos is not None:
        success = True
        final_pos = best_pos
        iterations = best_iter
    else:
        success = False
        final_pos = adv
        iterations = cfg.max_iterations

    final_dist, _ = _forward_cache(params, final_pos)
    l_c, _ = strategy_objective(strategy, clean_dist, final_dist, k)
    l_p, _ = perceptual_loss_positions(clean_pos, final_pos, topo, cfg.perceptual)
    n_top = strategy.n if strategy.kind == "abn" else 1
    return AttackResult(
        success=success,
        iterations_used=iterations,
        adversarial_motion=m.with_positions(final_pos),
        final_label=predicted_label(final_dist),
        final_topn=top_n(final_dist, n_top),
        final_classification_loss=l_c,
        final_perceptual_loss=l_p,
        final_total_loss=w * l_c + (1.0 - w) * l_p,
        displacement=final_pos - clean_pos,
        original_label=original_label,
        strategy=strategy,
        history=history,
    )


@dataclass
class AttackItem:
    """One batch entry: either a result or the error that rejected it."""

    index: int
    motion_id: str
    result: AttackResult | None
    error: str | None = None


@dataclass
class AttackSummary:
    count: int
    successes: int
    errors: int
    success_rate: float | None
    mean_iterations: float | None
    mean_perceptual_loss: float | None


def summarize(items: Sequence[AttackItem]) -> AttackSummary:
    """Aggregate batch statistics; rates are ``None`` (undefined) when empty."""
    count = len(items)
    results = [i.result for i in items if i.result is not None]
    wins = [r for r in results if r.success]
    return AttackSummary(
        count=count,
        successes=len(wins),
        errors=sum(1 for i in items if i.error is not None),
        success_rate=len(wins) / count if count else None,
        mean_iterations=(
            float(np.mean([r.iterations_used for r in wins])) if wins else None
        ),
        mean_perceptual_loss=(
            float(np.mean([r.final_perceptual_loss for r in wins])) if wins else None
        ),
    )


def attack_batch(
    motions: Sequence[Motion],
    params: ClassifierParams,
    strategy: AttackStrategy | Sequence[AttackStrategy],
    cfg: AttackConfig | None = None,
    ids: Sequence[str] | None = None,
):
    """Attack every motion independently; per-item failures do not abort.

    ``strategy`` may be a single strategy or one per motion.  Returns
    ``(items, summary)``.
    """
    cfg = cfg or AttackConfig()
    if isinstance(strategy, AttackStrategy):
        strategies = [strategy] * len(motions)
    else:
        strategies = list(strategy)
        if len(strategies) != len(motions):
            raise ValidationError(
                f"{len(strategies)} strategies for {len(motions)} motions"
            )
    if ids is None:
        ids = [f"{i:04d}" for i in range(len(motions))]
    elif len(ids) != len(motions):
        raise ValidationError(f"{len(ids)} ids for {len(motions)} motions")

    items = []
    for i, (motion, strat, motion_id) in enumerate(zip(motions, strategies, ids)):
        try:
            result = attack(motion, params, strat, cfg)
            items.append(AttackItem(index=i, motion_id=motion_id, result=result))
        except SkelAttackError as exc:
            items.append(
                AttackItem(index=i, motion_id=motion_id, result=None, error=str(exc))
            )
    return items, summarize(items)


# ---------------------------------------------------------------------------
# config and results-directory serialization


def config_to_dict(cfg: AttackConfig) -> dict:
    return {
        "learning_rate": cfg.learning_rate,
        "max_iterations": cfg.max_iterations,
        "w": cfg.weights.w,
        "alpha": cfg.perceptual.alpha,
        "betas": {str(k): v for k, v in sorted(cfg.perceptual.betas.items())},
        "max_order": cfg.perceptual.max_order,
        "adam_beta1": cfg.adam_beta1,
        "adam_beta2": cfg.adam_beta2,
        "adam_eps": cfg.adam_eps,
        "seed": cfg.seed,
        "track_history": cfg.track_history,
        "abn_early_stop": cfg.abn_early_stop,
    }


def config_from_dict(doc: dict) -> AttackConfig:
    """Build a config from a (possibly partial) JSON object."""
    known = {
        "learning_rate",
        "max_iterations",
        "w",
        "alpha",
        "betas",
        "max_order",
        "adam_beta1",
        "adam_beta2",
        "adam_eps",
        "seed",
        "track_history",
        "abn_early_stop",
        "strategy",  # consumed by the CLI, tolerated here
    }
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown attack config fields: {sorted(unknown)}")
    base = AttackConfig()
    perceptual = PerceptualConfig(
        alpha=doc.get("alpha", base.perceptual.alpha),
        betas={int(k): v for k, v in doc.get("betas", base.perceptual.betas).items()},
        max_order=doc.get("max_order", base.perceptual.max_order),
    )
    return AttackConfig(
        learning_rate=doc.get("learning_rate", base.learning_rate),
        max_iterations=doc.get("max_iterations", base.max_iterations),
        weights=LossWeights(w=doc.get("w", base.weights.w)),
        perceptual=perceptual,
        adam_beta1=doc.get("adam_beta1", base.adam_beta1),
        adam_beta2=doc.get("adam_beta2", base.adam_beta2),
        adam_eps=doc.get("adam_eps", base.adam_eps),
        seed=doc.get("seed", base.seed),
        track_history=doc.get("track_history", base.track_history),
        abn_early_stop=doc.get("abn_early_stop", base.abn_early_stop),
    )


CSV_COLUMNS = ("id", "success", "iterations", "perceptual_loss", "final_label", "original_label")


def _item_entry(item: AttackItem) -> dict:
    entry = {"id": item.motion_id, "index": item.index}
    if item.error is not None:
        entry.update(success=False, error=item.error)
        return entry
    r = item.result
    entry.update(
        success=r.success,
        iterations=r.iterations_used,
        perceptual_loss=r.final_perceptual_loss,
        classification_loss=r.final_classification_loss,
        total_loss=r.final_total_loss,
        final_label=r.final_label,
        final_topn=r.final_topn,
        original_label=r.original_label,
        strategy=r.strategy.describe(),
    )
    return entry


def save_attack_results(
    out_dir,
    motions: Sequence[Motion],
    items: Sequence[AttackItem],
    summary: AttackSummary,
    cfg: AttackConfig,
    strategy_label: str,
    model_ident: str,
) -> dict:
    """Write a results directory: adversarial/original motion files, a
    summary JSON and a per-item CSV.  Returns the summary document."""
    out = Path(out_dir)
    (out / "adversarial").mkdir(parents=True, exist_ok=True)
    (out / "originals").mkdir(parents=True, exist_ok=True)
    for item in items:
        if item.result is None:
            continue
        save_motion(item.result.adversarial_motion, out / "adversarial" / f"{item.motion_id}.json")
        save_motion(motions[item.index], out / "originals" / f"{item.motion_id}.json")

    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "attack_results",
        "model_id": model_ident,
        "strategy": strategy_label,
        "config": config_to_dict(cfg),
        "count": summary.count,
        "successes": summary.successes,
        "errors": summary.errors,
        "success_rate": summary.success_rate,
        "mean_iterations": summary.mean_iterations,
        "mean_perceptual_loss": summary.mean_perceptual_loss,
        "items": [_item_entry(i) for i in items],
    }
    (out / "summary.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )

    with open(out / "items.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for item in items:
            entry = _item_entry(item)
            writer.writerow(
                [
                    entry["id"],
                    str(entry["success"]).lower(),
                    entry.get("iterations", ""),
                    repr(entry["perceptual_loss"]) if "perceptual_loss" in entry else "",
                    entry.get("final_label", ""),
                    entry.get("original_label", ""),
                ]
            )
    return doc


def load_attack_results(results_dir):
    """Load a results directory back into memory.

    Returns ``(doc, results, originals)`` where ``results`` are reconstructed
    :class:`AttackResult` objects for every non-error item and ``originals``
    the matching clean motions.
    """
    results_dir = Path(results_dir)
    summary_path = results_dir / "summary.json"
    if not summary_path.exists():
        raise ParseError(f"{results_dir} does not contain summary.json")
    doc = json.loads(summary_path.read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"results {results_dir} have schema_version "
            f"{doc.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    results = []
    originals = []
    for entry in doc.get("items", []):
        if "error" in entry:
            continue
        adv = load_motion(results_dir / "adversarial" / f"{entry['id']}.json")
        orig = load_motion(results_dir / "originals" / f"{entry['id']}.json")
        results.append(
            AttackResult(
                success=entry["success"],
                iterations_used=entry["iterations"],
                adversarial_motion=adv,
                final_label=entry["final_label"],
                final_topn=list(entry["final_topn"]),
                final_classification_loss=entry["classification_loss"],
                final_perceptual_loss=entry["perceptual_loss"],
                final_total_loss=entry["total_loss"],
                displacement=adv.positions - orig.positions,
                original_label=entry["original_label"],
                strategy=AttackStrategy.parse(entry["strategy"]),
                history=None,
            )
        )
        originals.append(orig)
    return doc, results, originals
