"""
Orchestrateur de pipeline - Coordination des étapes de sélection de bandes

L'orchestrateur reçoit une commande CLI et enchaîne les étapes :
- LOADING : lecture du cube (+ carte d'étiquettes) ou d'un répertoire de patches
- PRESELECTING : IBRA (bandes peu redondantes avec leurs voisines)
- RANKING : classement entropique des candidates
- SELECTING : GSS pour un θ, ou balayage de plusieurs θ
- EVALUATING : métriques 5×2 d'ensembles de bandes fixés
- SIMULATING : filtres gaussiens + comparaison brut / simulé
- REPORTING : écriture de tous les fichiers, une seule fois, à la fin
"""
import logging
from enum import Enum, auto
from pathlib import Path
from typing import Any, Dict, List, Optional

from bandpick.collinearity import BandMatrix, VifTable, interband_redundancy
from bandpick.config import RunConfig
from bandpick.crossval import make_cv_plan
from bandpick.datacube import (
    LABELS_FILE,
    LabeledPatchSet,
    extract_patches,
    load_cube,
    load_label_map,
    load_patch_set,
    save_cube,
    save_patch_set,
    spectral_bin2,
    subsample_patch_set,
    zscore_apply,
    zscore_fit,
)
from bandpick.errors import NoCandidatesError, UsageError
from bandpick.reports import (
    ReportWriter,
    evaluation_frame,
    filter_bank_frame,
    metrics_payload,
    ibra_frame,
    ranking_frame,
    read_selection_json,
    render_distance_svg,
    selection_payload,
    sweep_table_frame,
)
from bandpick.saliency import rank_by_entropy
from bandpick.selection import evaluate_selection, greedy_spectral_selection, threshold_sweep
from bandpick.sensorsim import build_filter_bank, fwhm_nm_to_bands, simulate_multispectral

logger = logging.getLogger(__name__)


class PipelineStage(Enum):
    """États de la machine à états de l'orchestrateur."""
    LOADING = auto()
    PRESELECTING = auto()
    RANKING = auto()
    SELECTING = auto()
    EVALUATING = auto()
    SIMULATING = auto()
    REPORTING = auto()
    DONE = auto()


# Enchaînement des étapes pour chaque commande
COMMAND_STAGES = {
    "ibra": [PipelineStage.LOADING, PipelineStage.PRESELECTING, PipelineStage.REPORTING],
    "gss": [PipelineStage.LOADING, PipelineStage.PRESELECTING, PipelineStage.RANKING,
            PipelineStage.SELECTING, PipelineStage.REPORTING],
    "sweep": [PipelineStage.LOADING, PipelineStage.SELECTING, PipelineStage.REPORTING],
    "evaluate": [PipelineStage.LOADING, PipelineStage.EVALUATING, PipelineStage.REPORTING],
    "simulate": [PipelineStage.LOADING, PipelineStage.SIMULATING, PipelineStage.REPORTING],
}


class BandPickOrchestrator:
    """
    Orchestrateur principal - exécute une commande via une machine à états.

    Chaque gestionnaire d'étape lit et complète `run_data`, puis la boucle
    passe à l'étape suivante de la commande jusqu'à DONE.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.writer = ReportWriter(config.out_dir)
        logger.info(f"🚀 Orchestrateur initialisé (threads={config.threads}, sortie={config.out_dir})")

    def run(self, command: str) -> Dict[str, Any]:
        """
        Point d'entrée principal. Retourne un résumé :
        {"command", "outputs", "reports", "ibra", "metrics"}.
        """
        if command not in COMMAND_STAGES:
            raise UsageError(f"Commande inconnue: {command}")

        stages = COMMAND_STAGES[command] + [PipelineStage.DONE]
        run_data: Dict[str, Any] = {"command": command, "stage": stages[0], "outputs": []}

        while run_data["stage"] != PipelineStage.DONE:
            current = run_data["stage"]
            logger.info(f"🔄 Étape: {current.name}")

            if current == PipelineStage.LOADING:
                self._handle_loading(run_data)
            elif current == PipelineStage.PRESELECTING:
                self._handle_preselecting(run_data)
            elif current == PipelineStage.RANKING:
                self._handle_ranking(run_data)
            elif current == PipelineStage.SELECTING:
                self._handle_selecting(run_data)
            elif current == PipelineStage.EVALUATING:
                self._handle_evaluating(run_data)
            elif current == PipelineStage.SIMULATING:
                self._handle_simulating(run_data)
            elif current == PipelineStage.REPORTING:
                self._handle_reporting(run_data)

            run_data["stage"] = stages[stages.index(current) + 1]

        logger.info(f"✅ Commande '{command}' terminée")
        return run_data

    # ═════════════════════════════════════════════════════════
    # GESTIONNAIRES D'ÉTAPES
    # ═════════════════════════════════════════════════════════

    def _handle_loading(self, run_data: Dict):
        """LOADING: jeu de patches et matrice pixels × bandes."""
        config = self.config
        if config.input_path is None:
            raise UsageError("--input est requis")

        cube = None
        if config.input_path.is_dir():
            if not (config.input_path / LABELS_FILE).exists():
                raise UsageError(f"{config.input_path}: répertoire sans {LABELS_FILE}")
            if config.bin2:
                raise UsageError("--bin2 ne s'applique qu'à un cube HSC1")
            patch_set = load_patch_set(config.input_path)
        else:
            if config.labels_path is None:
                raise UsageError("--labels est requis avec un cube HSC1")
            cube = load_cube(config.input_path)
            label_map = load_label_map(config.labels_path, cube.height, cube.width)
            if config.bin2:
                cube = spectral_bin2(cube)
            patch_set = extract_patches(cube, label_map, config.patch_size, config.stride)

        patch_set = subsample_patch_set(patch_set, config.fraction, config.cv_seed)

        run_data["cube"] = cube
        run_data["patch_set"] = patch_set
        run_data["matrix"] = BandMatrix.from_patch_set(patch_set, config.subsample_cap)
        logger.info(f"📂 {len(patch_set)} patches, {patch_set.bands} bandes, {patch_set.classes} classes")

    def _entropy_matrix(self, run_data: Dict) -> BandMatrix:
        # l'entropie se calcule par défaut sur les valeurs avant normalisation
        if not self.config.entropy_on_normalized:
            return run_data["matrix"]
        patch_set = run_data["patch_set"]
        normalized = zscore_apply(patch_set, zscore_fit(patch_set))
        return BandMatrix.from_patch_set(normalized, self.config.subsample_cap)

    def _handle_preselecting(self, run_data: Dict):
        """PRESELECTING: IBRA pour chaque θ, cache VIF partagé."""
        matrix = run_data["matrix"]
        table = VifTable(matrix)
        results = [
            interband_redundancy(matrix, theta, table=table, workers=self.config.threads)
            for theta in self.config.thetas
        ]
        run_data["ibra"] = results

        if run_data["command"] != "ibra" and not any(r.candidates for r in results):
            raise NoCandidatesError(f"Aucune bande candidate pour θ ∈ {self.config.thetas}")

    def _handle_ranking(self, run_data: Dict):
        """RANKING: classement entropique des candidates (un seul θ ; le balayage classe lui-même)."""
        if len(self.config.thetas) > 1:
            return
        ibra = run_data["ibra"][0]
        if not ibra.candidates:
            raise NoCandidatesError(f"θ={ibra.theta:g}: aucune bande candidate")
        run_data["ranking"] = rank_by_entropy(
            self._entropy_matrix(run_data), ibra.candidates, self.config.bit_depth, self.config.threads
        )

    def _handle_selecting(self, run_data: Dict):
        """SELECTING: GSS sur un θ, ou balayage si plusieurs θ."""
        config = self.config
        patch_set = run_data["patch_set"]
        plan = make_cv_plan(patch_set, config.cv_seed)

        if run_data["command"] == "gss" and len(config.thetas) == 1:
            report = greedy_spectral_selection(
                patch_set, run_data["matrix"], run_data["ranking"], config.k,
                config.classifier, plan, theta=config.thetas[0], workers=config.threads,
            )
            run_data["reports"] = [report]
            return

        reports = threshold_sweep(
            patch_set, run_data["matrix"], config.thetas, config.k, config.classifier, plan,
            bit_depth=config.bit_depth, entropy_matrix=self._entropy_matrix(run_data),
            workers=config.threads,
        )
        if all(report.empty for report in reports):
            raise NoCandidatesError(f"Aucune bande candidate pour θ ∈ {config.thetas}")
        run_data["reports"] = reports

    def _handle_evaluating(self, run_data: Dict):
        """EVALUATING: spectre complet et candidates IBRA, ou liste --bands."""
        config = self.config
        patch_set = run_data["patch_set"]
        plan = make_cv_plan(patch_set, config.cv_seed)

        subsets: Dict[str, List[int]] = {}
        if config.bands:
            subsets["bands"] = list(config.bands)
        else:
            subsets["full_spectrum"] = list(range(patch_set.bands))
            table = VifTable(run_data["matrix"])
            for theta in config.thetas:
                ibra = interband_redundancy(run_data["matrix"], theta, table=table, workers=config.threads)
                if ibra.candidates:
                    subsets[f"ibra_theta_{theta:g}"] = list(ibra.candidates)
                else:
                    logger.warning(f"⚠️ θ={theta:g}: aucune candidate, configuration ignorée")

        run_data["metrics"] = {
            name: evaluate_selection(patch_set, bands, config.classifier, plan, config.threads)
            for name, bands in subsets.items()
        }
        run_data["subsets"] = subsets

    def _handle_simulating(self, run_data: Dict):
        """SIMULATING: banc de filtres centré sur la sélection, évaluation brut vs simulé."""
        config = self.config
        if config.report_path is None:
            raise UsageError("--report est requis pour la simulation")
        selection = read_selection_json(config.report_path)

        patch_set: LabeledPatchSet = run_data["patch_set"]
        if int(selection["n_bands"]) != patch_set.bands:
            raise UsageError(
                f"Rapport sur {selection['n_bands']} bandes, jeu de données à {patch_set.bands}"
            )
        selected = sorted(int(b) for b in selection["selected_bands"])
        if not selected:
            raise UsageError(f"{config.report_path}: aucune bande sélectionnée")

        fwhm = config.fwhm_bands
        if config.fwhm_nm is not None:
            fwhm = fwhm_nm_to_bands(patch_set.axis, config.fwhm_nm)
        bank = build_filter_bank(selected, patch_set.axis, fwhm)

        simulated = simulate_multispectral(patch_set, bank)
        plan = make_cv_plan(patch_set, config.cv_seed)
        run_data["metrics"] = {
            "raw": evaluate_selection(patch_set, selected, config.classifier, plan, config.threads),
            "simulated": evaluate_selection(
                simulated, list(range(bank.k)), config.classifier, plan, config.threads
            ),
        }
        run_data["bank"] = bank
        run_data["simulated"] = simulated
        if run_data["cube"] is not None:
            run_data["simulated_cube"] = simulate_multispectral(run_data["cube"], bank)

        delta = run_data["metrics"]["raw"].macro_f1 - run_data["metrics"]["simulated"].macro_f1
        logger.info(f"📊 F1 brut - F1 simulé = {delta:+.4f}")

    def _handle_reporting(self, run_data: Dict):
        """REPORTING: tous les fichiers sont écrits ici, une seule fois."""
        command = run_data["command"]
        patch_set = run_data["patch_set"]
        writer = self.writer

        if command in ("ibra", "gss"):
            for result in run_data["ibra"]:
                frame = ibra_frame(result, patch_set.axis)
                writer.add_csv(f"ibra_theta_{result.theta:g}.csv", frame)
                writer.add_text(f"ibra_theta_{result.theta:g}.svg",
                                render_distance_svg(frame, f"IBRA θ={result.theta:g}"))

        if "ranking" in run_data:
            theta = run_data["ibra"][0].theta
            writer.add_csv(f"ranking_theta_{theta:g}.csv", ranking_frame(run_data["ranking"], patch_set.axis))

        if command in ("gss", "sweep"):
            reports = run_data["reports"]
            winner = reports[0]
            writer.add_json("selection.json", selection_payload(winner))
            writer.add_csv("selection_table.csv", sweep_table_frame(reports))
            if len(reports) > 1:
                writer.add_json("sweep.json", [selection_payload(report) for report in reports])

        if command == "evaluate":
            writer.add_csv("evaluation.csv", evaluation_frame(run_data["metrics"]))
            writer.add_json("evaluation.json", {
                name: {"bands": run_data["subsets"][name], "metrics": metrics_payload(metrics)}
                for name, metrics in run_data["metrics"].items()
            })

        if command == "simulate":
            writer.add_csv("filter_bank.csv", filter_bank_frame(run_data["bank"]))
            writer.add_csv("simulation_metrics.csv", evaluation_frame(run_data["metrics"]))

        run_data["outputs"] = writer.flush()

        # les données simulées suivent les rapports
        out_dir: Path = self.config.out_dir
        if command == "simulate":
            if run_data.get("simulated_cube") is not None:
                save_cube(run_data["simulated_cube"], out_dir / "simulated.hsc")
                run_data["outputs"].append(out_dir / "simulated.hsc")
            else:
                save_patch_set(run_data["simulated"], out_dir / "simulated")
                run_data["outputs"].append(out_dir / "simulated")


def winner_summary(run_data: Dict) -> Optional[str]:
    """Une ligne lisible pour le meilleur rapport d'une sélection."""
    reports = run_data.get("reports")
    if not reports:
        return None
    winner = reports[0]
    wavelengths = ", ".join(f"{w:g}" for w in winner.selected_wavelengths_nm)
    return f"θ={winner.theta:g} k={winner.k}: bandes {winner.selected} ({wavelengths} nm), F1={winner.best_f1:.4f}"
