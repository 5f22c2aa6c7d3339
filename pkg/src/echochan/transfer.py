"""Transfer workflow: pretrain on a source channel, reuse on a target.

Only the readout is ever retrained; the reservoir weights are fixed at
build time and shared across domains. Direct transfer evaluates the
source-trained readout on target data as-is. Fine-tuning re-solves the
readout on target data, optionally blending the source and target
accumulators with a convex weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .channelsim import SequenceDataset
from .errors import ShapeError
from .evaluation import MetricReport, evaluate
from .readout import (
    Accumulators,
    ReadoutModel,
    RegressionMethod,
    accumulate_dataset,
    solve,
)
from .reservoir import Reservoir


@dataclass(frozen=True)
class DirectTransfer:
    """Evaluate the source-trained readout on the target domain as-is."""


@dataclass(frozen=True)
class FineTune:
    """Re-solve the readout on target data.

    ``blend_weight`` mixes source accumulators into the solve
    (0 = pure target retraining, 1 = source only). Values above 0 are an
    experimental extension beyond plain retraining.
    """

    blend_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.blend_weight <= 1.0:
            raise ValueError(f"blend_weight must be in [0, 1], got {self.blend_weight}")


TransferMode = Union[DirectTransfer, FineTune]


@dataclass(frozen=True)
class TransferPlan:
    source: SequenceDataset
    target_train: SequenceDataset
    target_test: SequenceDataset
    mode: TransferMode

    def __post_init__(self):
        dims = {
            (ds.input_dim, ds.output_dim)
            for ds in (self.source, self.target_train, self.target_test)
        }
        if len(dims) != 1:
            raise ShapeError(f"source/target datasets disagree on (K, L): {sorted(dims)}")


def pretrain(
    r: Reservoir, source: SequenceDataset, method: RegressionMethod, threads: int = 1
) -> tuple[ReadoutModel, Accumulators]:
    """Fit on the source domain, keeping the accumulators for blending."""
    acc = accumulate_dataset(r, source, threads=threads)
    return solve(acc, method), acc


def direct_transfer_eval(
    r: Reservoir, model: ReadoutModel, target_test: SequenceDataset
) -> MetricReport:
    """Evaluate a source-trained model on target data without retraining."""
    return evaluate(r, model, target_test)


def blend_accumulators(source: Accumulators, target: Accumulators, alpha: float) -> Accumulators:
    """Convex combination ``alpha * source + (1 - alpha) * target``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if source.a.shape != target.a.shape or source.b.shape != target.b.shape:
        raise ShapeError(
            f"cannot blend accumulators of shapes a {source.a.shape}/{target.a.shape}, "
            f"b {source.b.shape}/{target.b.shape}"
        )
    if alpha == 0.0:
        return target
    if alpha == 1.0:
        return source
    return Accumulators(
        a=alpha * source.a + (1.0 - alpha) * target.a,
        b=alpha * source.b + (1.0 - alpha) * target.b,
        samples_seen=int(
            round(alpha * source.samples_seen + (1.0 - alpha) * target.samples_seen)
        ),
    )


def fine_tune(
    r: Reservoir,
    source_acc: Accumulators,
    target_train: SequenceDataset,
    alpha: float,
    method: RegressionMethod,
    threads: int = 1,
) -> ReadoutModel:
    """Re-solve the readout on target data, blending in source statistics.

    ``alpha = 0`` reproduces a plain fit on the target training set.
    """
    target_acc = accumulate_dataset(r, target_train, threads=threads)
    return solve(blend_accumulators(source_acc, target_acc, alpha), method)


def run_plan(
    r: Reservoir, plan: TransferPlan, method: RegressionMethod, threads: int = 1
) -> tuple[MetricReport, ReadoutModel]:
    """Execute a transfer plan end to end; returns the target-test report."""
    model, source_acc = pretrain(r, plan.source, method, threads=threads)
    if isinstance(plan.mode, FineTune):
        model = fine_tune(
            r, source_acc, plan.target_train, plan.mode.blend_weight, method, threads=threads
        )
    report = direct_transfer_eval(r, model, plan.target_test)
    return report, model
