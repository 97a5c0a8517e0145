"""
Classifieurs wrapper utilisés par GSS pour noter un sous-ensemble de bandes.
Chaque backend implémente la même interface et peut être substitué.
"""

from bandpick.config import ClassifierKind, ClassifierSpec

from .base_classifier import ClassifierBackend, TrainedModel, featurize
from .external_classifier import ExternalCommandBackend, HttpBackend
from .logistic_classifier import LogisticBaseline, predict, train

_BACKENDS = {
    ClassifierKind.LOGISTIC_BASELINE: LogisticBaseline,
    ClassifierKind.EXTERNAL: ExternalCommandBackend,
    ClassifierKind.HTTP: HttpBackend,
}


def build_backend(spec: ClassifierSpec) -> ClassifierBackend:
    return _BACKENDS[spec.kind](spec)


__all__ = [
    'ClassifierBackend',
    'TrainedModel',
    'featurize',
    'train',
    'predict',
    'LogisticBaseline',
    'ExternalCommandBackend',
    'HttpBackend',
    'build_backend',
]
