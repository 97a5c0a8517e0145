"""
bandpick - sélection de bandes hyperspectrales pour la conception de capteurs
multispectraux.

IBRA pré-sélectionne les bandes peu redondantes avec leurs voisines, GSS
choisit parmi elles les k bandes qui maximisent le F1 d'un classifieur, et
`sensorsim` simule les filtres gaussiens correspondants.
"""

from .collinearity import BandMatrix, IbraResult, VifTable, interband_redundancy, local_minima, vif_pair
from .config import ClassifierKind, ClassifierSpec, RunConfig, Settings
from .crossval import CvPlan, MetricsReport, make_cv_plan
from .datacube import HyperCube, LabeledPatchSet, WavelengthAxis, load_cube, save_cube
from .errors import BandpickError
from .saliency import EntropyRanking, band_entropy, rank_by_entropy
from .selection import (
    SelectionReport,
    evaluate_selection,
    greedy_spectral_selection,
    threshold_sweep,
    vif_multi,
)
from .sensorsim import FilterBank, build_filter_bank, simulate_multispectral

__version__ = "1.0.0"

__all__ = [
    'BandMatrix',
    'IbraResult',
    'VifTable',
    'interband_redundancy',
    'local_minima',
    'vif_pair',
    'ClassifierKind',
    'ClassifierSpec',
    'RunConfig',
    'Settings',
    'CvPlan',
    'MetricsReport',
    'make_cv_plan',
    'HyperCube',
    'LabeledPatchSet',
    'WavelengthAxis',
    'load_cube',
    'save_cube',
    'BandpickError',
    'EntropyRanking',
    'band_entropy',
    'rank_by_entropy',
    'SelectionReport',
    'evaluate_selection',
    'greedy_spectral_selection',
    'threshold_sweep',
    'vif_multi',
    'FilterBank',
    'build_filter_bank',
    'simulate_multispectral',
]
