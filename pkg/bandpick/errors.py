"""
Hiérarchie d'exceptions de bandpick.

Chaque exception porte un `exit_code` utilisé par la CLI :
1 = erreur de calcul, 2 = erreur d'utilisation.
"""


class BandpickError(Exception):
    """Erreur de base de la boîte à outils."""

    exit_code = 1


class CubeFormatError(BandpickError):
    """Magic ou version HSC1 invalide."""


class CubeTruncationError(BandpickError):
    """Taille du payload incohérente avec les dimensions de l'en-tête."""


class CubeDataError(BandpickError):
    """Valeurs NaN/Inf dans le payload."""


class PreconditionError(BandpickError, ValueError):
    """Une précondition d'opération n'est pas respectée."""


class DivideByZeroBandError(PreconditionError):
    """Dénominateur nul dans la correction de réflectance."""

    def __init__(self, band: int):
        super().__init__(f"Dénominateur nul (cible == noir) à la bande {band}")
        self.band = band


class EmptyDatasetError(PreconditionError):
    """Aucun pixel étiqueté / aucun patch."""


class StratificationError(PreconditionError):
    """Une classe a moins de 2 patches, stratification impossible."""


class DimensionMismatchError(PreconditionError):
    """Dimensions incompatibles (bandes, features...)."""


class BackendError(BandpickError):
    """Échec du classifieur externe (commande ou HTTP)."""


class NoCandidatesError(BandpickError):
    """Aucun seuil θ ne produit de bande candidate."""


class UsageError(BandpickError):
    """Mauvaise utilisation de la CLI (fichier manquant, paramètre invalide)."""

    exit_code = 2
