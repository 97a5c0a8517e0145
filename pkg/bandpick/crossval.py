"""
Validation croisée 5×2 stratifiée et métriques de classification
(OA, précision/rappel/F1 macro).
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, Field
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import RepeatedStratifiedKFold

from bandpick.datacube import LabeledPatchSet
from bandpick.errors import PreconditionError, StratificationError

logger = logging.getLogger(__name__)

REPETITIONS = 5
FOLDS = 2

METRIC_NAMES = ("oa", "macro_precision", "macro_recall", "macro_f1")


# ═══════════════════════════════════════════════════════════
# PLAN DE VALIDATION CROISÉE
# ═══════════════════════════════════════════════════════════

@dataclass(frozen=True)
class CvPlan:
    """5 répétitions × 2 plis ; chaque répétition est un découpage stratifié."""

    seed: int
    assignments: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    repetitions: int = REPETITIONS
    folds: int = FOLDS

    def splits(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Les 10 couples (train, validation), dans un ordre fixe."""
        for fold_a, fold_b in self.assignments:
            yield fold_a, fold_b
            yield fold_b, fold_a

    def __len__(self) -> int:
        return self.repetitions * self.folds


def make_cv_plan(patch_set: LabeledPatchSet, seed: int) -> CvPlan:
    counts = patch_set.class_counts()
    if counts.min() < FOLDS:
        poor = [int(c) for c in np.flatnonzero(counts < FOLDS)]
        raise StratificationError(f"Classes avec moins de {FOLDS} patches: {poor}")

    splitter = RepeatedStratifiedKFold(n_splits=FOLDS, n_repeats=REPETITIONS, random_state=seed)
    folds = [np.sort(test) for _, test in splitter.split(np.zeros(len(patch_set)), patch_set.labels)]
    assignments = tuple((folds[2 * r], folds[2 * r + 1]) for r in range(REPETITIONS))
    for fold_a, fold_b in assignments:
        for fold in (fold_a, fold_b):
            fold.flags.writeable = False
    return CvPlan(seed=seed, assignments=assignments)


# ═══════════════════════════════════════════════════════════
# MÉTRIQUES
# ═══════════════════════════════════════════════════════════

class FoldMetrics(BaseModel):
    oa: float = Field(ge=0, le=1)
    macro_precision: float = Field(ge=0, le=1)
    macro_recall: float = Field(ge=0, le=1)
    macro_f1: float = Field(ge=0, le=1)


class MetricsReport(FoldMetrics):
    """Moyennes sur les plis + détail par pli."""

    per_fold: List[FoldMetrics]

    @classmethod
    def aggregate(cls, per_fold: List[FoldMetrics]) -> "MetricsReport":
        if not per_fold:
            raise PreconditionError("Aucun pli à agréger")
        means = {name: float(np.mean([getattr(f, name) for f in per_fold])) for name in METRIC_NAMES}
        return cls(per_fold=per_fold, **means)

    def std(self) -> dict:
        """Écart-type (population) de chaque métrique sur les plis."""
        return {name: float(np.std([getattr(f, name) for f in self.per_fold])) for name in METRIC_NAMES}


def metrics_from_confusion(matrix: np.ndarray) -> FoldMetrics:
    """
    Métriques depuis une matrice de confusion (lignes = vérité, colonnes = prédiction).

    Une classe sans vrai ni prédit positif a P = R = F1 = 0 et compte
    quand même dans la moyenne macro.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    true_positives = np.diag(matrix)
    predicted = matrix.sum(axis=0)
    actual = matrix.sum(axis=1)

    precision = np.divide(true_positives, predicted, out=np.zeros_like(true_positives), where=predicted > 0)
    recall = np.divide(true_positives, actual, out=np.zeros_like(true_positives), where=actual > 0)
    denominator = precision + recall
    f1 = np.divide(2 * precision * recall, denominator, out=np.zeros_like(true_positives), where=denominator > 0)

    total = matrix.sum()
    return FoldMetrics(
        oa=float(true_positives.sum() / total) if total > 0 else 0.0,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
    )


def fold_metrics(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> FoldMetrics:
    matrix = confusion_matrix(y_true, y_pred, labels=list(range(n_classes)))
    return metrics_from_confusion(matrix)
