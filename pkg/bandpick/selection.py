"""
Sélection spectrale gloutonne (GSS).

S_f démarre avec les k candidates de plus forte entropie. À chaque étape,
la bande de S_f la plus multicolinéaire (VIF multiple maximal) est retirée
et remplacée par la candidate suivante dans l'ordre entropique. On garde la
combinaison de meilleur F1 macro (moyenne sur les 10 plis 5×2) et on
s'arrête dès une chute absolue de 0.05 par rapport au meilleur F1.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from bandpick.classifiers import build_backend, featurize
from bandpick.collinearity import (
    BandMatrix,
    VifTable,
    interband_redundancy,
    ols_r_squared,
    vif_from_r_squared,
    VIF_MAX,
)
from bandpick.config import ClassifierSpec
from bandpick.crossval import CvPlan, MetricsReport, fold_metrics
from bandpick.datacube import LabeledPatchSet, zscore_apply, zscore_fit
from bandpick.errors import PreconditionError
from bandpick.saliency import DEFAULT_BIT_DEPTH, EntropyRanking, rank_by_entropy

logger = logging.getLogger(__name__)

# chute absolue de F1 qui arrête la recherche
F1_DROP_STOP = 0.05
# tolérance relative pour considérer deux VIF comme égaux
VIF_TIE_TOLERANCE = 1e-9


# ═══════════════════════════════════════════════════════════
# RAPPORTS
# ═══════════════════════════════════════════════════════════

class TraceStep(BaseModel):
    state: List[int]
    removed: Optional[int] = None
    added: Optional[int] = None
    f1: float


class SelectionReport(BaseModel):
    k: int
    theta: Optional[float] = None
    n_bands: int
    candidates: List[int] = Field(default_factory=list)
    selected: List[int] = Field(default_factory=list)
    selected_wavelengths_nm: List[float] = Field(default_factory=list)
    best_f1: float = 0.0
    metrics: Optional[MetricsReport] = None
    trace: List[TraceStep] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    empty: bool = False


# ═══════════════════════════════════════════════════════════
# ÉVALUATION D'UN SOUS-ENSEMBLE
# ═══════════════════════════════════════════════════════════

def evaluate_selection(
    patch_set: LabeledPatchSet,
    band_subset: Sequence[int],
    spec: ClassifierSpec,
    plan: CvPlan,
    workers: int = 1,
) -> MetricsReport:
    """
    Métriques moyennes sur les 10 plis de validation.

    Pour chaque pli : z-score ajusté sur l'entraînement seul puis appliqué aux
    deux parties, features = moyennes spatiales, entraînement, prédiction.
    Le sous-ensemble est traité comme un ensemble (ordre croissant des bandes).
    """
    bands = sorted({int(b) for b in band_subset})
    if not bands or bands[0] < 0 or bands[-1] >= patch_set.bands:
        raise PreconditionError(f"Sous-ensemble de bandes invalide: {list(band_subset)}")

    restricted = patch_set.select_bands(bands)
    backend = build_backend(spec)
    feature_columns = list(range(len(bands)))

    def run_fold(split):
        train_idx, val_idx = split
        train_set = restricted.subset(train_idx)
        val_set = restricted.subset(val_idx)
        params = zscore_fit(train_set)
        X_train, y_train = featurize(zscore_apply(train_set, params), feature_columns)
        X_val, y_val = featurize(zscore_apply(val_set, params), feature_columns)
        y_pred = backend.fit_predict(X_train, y_train, X_val, patch_set.classes)
        return fold_metrics(y_val, y_pred, patch_set.classes)

    splits = list(plan.splits())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_fold = list(pool.map(run_fold, splits))
    else:
        per_fold = [run_fold(split) for split in splits]

    report = MetricsReport.aggregate(per_fold)
    logger.debug(f"📊 Bandes {bands}: F1={report.macro_f1:.4f} OA={report.oa:.4f}")
    return report


# ═══════════════════════════════════════════════════════════
# MULTICOLINÉARITÉ
# ═══════════════════════════════════════════════════════════

def vif_multi(m: BandMatrix, subset: Sequence[int]) -> List[float]:
    """
    VIF de chaque bande du sous-ensemble, régressée (OLS avec intercept)
    sur toutes les autres bandes du sous-ensemble.
    """
    subset = [int(b) for b in subset]
    if len(subset) < 2:
        raise PreconditionError("vif_multi requiert au moins 2 bandes")
    if len(set(subset)) != len(subset) or min(subset) < 0 or max(subset) >= m.bands:
        raise PreconditionError(f"Sous-ensemble invalide: {subset}")

    columns = m.values[:, subset]
    vifs = []
    for position in range(len(subset)):
        target = columns[:, position]
        others = np.delete(columns, position, axis=1)
        # les régresseurs constants sont absorbés par l'intercept
        others = others[:, np.ptp(others, axis=0) > 0]
        if np.ptp(target) == 0 or others.shape[1] == 0:
            vifs.append(VIF_MAX)
            continue
        vifs.append(vif_from_r_squared(ols_r_squared(target, others)))
    return vifs


def _eviction_position(selected: Sequence[int], vifs: Sequence[float]) -> int:
    """Position du VIF maximal ; égalité → plus petit indice de bande."""
    highest = max(vifs)
    tied = [n for n, v in enumerate(vifs) if v >= highest * (1 - VIF_TIE_TOLERANCE)]
    return min(tied, key=lambda n: selected[n])


# ═══════════════════════════════════════════════════════════
# GSS
# ═══════════════════════════════════════════════════════════

def greedy_spectral_selection(
    patch_set: LabeledPatchSet,
    m: BandMatrix,
    candidates: EntropyRanking,
    k: int,
    spec: ClassifierSpec,
    plan: CvPlan,
    theta: Optional[float] = None,
    workers: int = 1,
) -> SelectionReport:
    if k < 1:
        raise PreconditionError(f"k={k} doit être ≥ 1")
    if len(candidates) < 1:
        raise PreconditionError("Aucune bande candidate")

    ranked = list(candidates.band_index)
    warnings = []
    if k > len(ranked):
        message = f"k={k} > {len(ranked)} candidates : toutes les candidates sont retenues"
        logger.warning(f"⚠️ {message}")
        warnings.append(message)

    selected = ranked[:k]
    remaining = ranked[k:]

    def score(state):
        return evaluate_selection(patch_set, state, spec, plan, workers)

    metrics = score(selected)
    best_f1, best_state, best_metrics = metrics.macro_f1, list(selected), metrics
    trace = [TraceStep(state=list(selected), f1=metrics.macro_f1)]
    logger.info(f"🔄 GSS état initial {selected}: F1={metrics.macro_f1:.4f}")

    # une seule bande sélectionnée : pas de VIF multiple, on remplace directement
    while remaining:
        if len(selected) >= 2:
            position = _eviction_position(selected, vif_multi(m, selected))
        else:
            position = 0
        removed = selected.pop(position)
        added = remaining.pop(0)
        selected.append(added)

        metrics = score(selected)
        trace.append(TraceStep(state=list(selected), removed=removed, added=added, f1=metrics.macro_f1))
        logger.info(f"🔄 GSS -{removed} +{added} → {selected}: F1={metrics.macro_f1:.4f}")

        if metrics.macro_f1 > best_f1:
            best_f1, best_state, best_metrics = metrics.macro_f1, list(selected), metrics
        elif metrics.macro_f1 <= best_f1 - F1_DROP_STOP:
            logger.info(f"⏹️ Chute de F1 ≥ {F1_DROP_STOP} : arrêt de la recherche")
            break

    axis = patch_set.axis
    logger.info(f"✅ GSS θ={theta} k={k}: {best_state} (F1={best_f1:.4f})")
    return SelectionReport(
        k=k,
        theta=theta,
        n_bands=patch_set.bands,
        candidates=sorted(ranked),
        selected=best_state,
        selected_wavelengths_nm=[axis[b] for b in best_state],
        best_f1=best_f1,
        metrics=best_metrics,
        trace=trace,
        warnings=warnings,
    )


def threshold_sweep(
    patch_set: LabeledPatchSet,
    m: BandMatrix,
    thetas: Sequence[float],
    k: int,
    spec: ClassifierSpec,
    plan: CvPlan,
    bit_depth: int = DEFAULT_BIT_DEPTH,
    entropy_matrix: Optional[BandMatrix] = None,
    workers: int = 1,
) -> List[SelectionReport]:
    """
    IBRA + entropie + GSS pour chaque θ. Rapports triés par F1 décroissant
    (le gagnant en tête) ; les θ sans candidate sont marqués vides et placés
    à la fin, hors classement.

    `entropy_matrix` permet de classer sur des valeurs avant normalisation.
    """
    if not thetas:
        raise PreconditionError("Aucun θ à balayer")

    table = VifTable(m)
    ranked_reports, empty_reports = [], []
    for theta in thetas:
        ibra = interband_redundancy(m, theta, table=table, workers=workers)
        if not ibra.candidates:
            logger.warning(f"⚠️ θ={theta:g}: aucune bande candidate")
            empty_reports.append(SelectionReport(
                k=k, theta=theta, n_bands=patch_set.bands, empty=True,
                warnings=[f"θ={theta:g} ne produit aucune candidate"],
            ))
            continue
        ranking = rank_by_entropy(entropy_matrix if entropy_matrix is not None else m,
                                  ibra.candidates, bit_depth, workers)
        ranked_reports.append(
            greedy_spectral_selection(patch_set, m, ranking, k, spec, plan, theta=theta, workers=workers)
        )

    ranked_reports.sort(key=lambda report: -report.best_f1)
    return ranked_reports + empty_reports
