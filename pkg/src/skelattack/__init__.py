"""Adversarial attacks on skeleton-based action recognizers.

The package provides desk-scale differentiable action classifiers, the
perceptual-loss-constrained attack optimization, a black-box transfer
harness, and vulnerability-analysis statistics, plus synthetic dataset
generation and a CLI tying it all together.
"""

from .analysis import (
    CorrelationReport,
    DeviationStats,
    correlation_report,
    deviation_stats,
    joint_displacement_series,
)
from .attack import (
    AttackConfig,
    AttackItem,
    AttackResult,
    AttackStrategy,
    AttackSummary,
    attack,
    attack_batch,
    attack_objective,
    strategy_success,
)
from .data import (
    Dataset,
    DatasetSpec,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .errors import (
    DivergenceError,
    EmptyInputError,
    NumericError,
    ParseError,
    SampleRejectedError,
    SkelAttackError,
    StratificationError,
    TrainingError,
    ValidationError,
)
from .losses import (
    LossWeights,
    PerceptualConfig,
    ab_loss,
    abn_loss,
    bone_loss,
    dynamics_loss,
    one_hot,
    perceptual_loss,
    sa_loss,
    total_gradient,
    total_loss,
)
from .models import (
    ClassifierParams,
    ClassifierSpec,
    OptConfig,
    accuracy,
    forward,
    init_params,
    input_gradient,
    load_params,
    model_id,
    predicted_label,
    save_params,
    top_n,
    train,
)
from .motion import (
    Motion,
    derivative,
    load_motion,
    root_centered,
    save_motion,
)
from .skeleton import (
    DEFAULT_BONE_LENGTHS,
    DEFAULT_TOPOLOGY,
    JointAngleTrack,
    SkeletonTopology,
    bone_length_vector,
    default_topology,
    forward_kinematics,
)
from .transfer import TargetTransferResult, TransferReport, transfer_attack

__version__ = "0.1.0"
