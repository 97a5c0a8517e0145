"""
BANDPICK - Sélection de bandes hyperspectrales
Point d'entrée principal (CLI) avec orchestrateur de pipeline

Aucune logique métier ici - uniquement commandes click + orchestrateur.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

import click
from dotenv import load_dotenv
from pydantic import ValidationError

from bandpick.config import ClassifierKind, ClassifierSpec, RunConfig, Settings, parse_theta_range
from bandpick.datacube import save_cube, save_label_map, save_patch_set
from bandpick.errors import BandpickError
from bandpick.reports import bands_from_text, read_ibra_csv, render_distance_svg
from bandpick.synthetic import GENERATORS, mosaic
from pipeline_orchestrator import BandPickOrchestrator, winner_summary

# Charger variables d'environnement
load_dotenv()

SETTINGS = Settings.from_env()

# Configuration logging
logging.basicConfig(
    level=getattr(logging, SETTINGS.log_level, logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_USAGE = 2
DEFAULT_SWEEP_RANGE = "5:12"


# ═══════════════════════════════════════════════════════════
# OPTIONS PARTAGÉES
# ═══════════════════════════════════════════════════════════

def dataset_options(func):
    options = [
        click.option('--input', 'input_path', type=click.Path(path_type=Path), required=True,
                     help='Cube HSC1 ou répertoire de patches (labels.csv).'),
        click.option('--labels', 'labels_path', type=click.Path(path_type=Path),
                     help="Carte d'étiquettes CSV (requis avec un cube)."),
        click.option('--patch-size', type=int, default=5, show_default=True, help='Côté des patches (impair).'),
        click.option('--stride', type=int, default=1, show_default=True, help="Pas d'extraction des patches."),
        click.option('--bin2', is_flag=True, help='Binning spectral 2× avant extraction.'),
        click.option('--fraction', type=float, default=1.0, show_default=True,
                     help='Fraction stratifiée des patches conservée.'),
        click.option('--subsample-cap', type=int, default=100_000, show_default=True,
                     help='Nombre maximal de pixels pour IBRA / entropie.'),
        click.option('--seed', type=int, default=42, show_default=True,
                     help='Graine de la validation croisée et du classifieur.'),
        click.option('--out', 'out_dir', type=click.Path(path_type=Path), default=Path('out'), show_default=True,
                     help='Répertoire de sortie.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def theta_options(func):
    func = click.option('--theta-range', help='Plage θ LO:HI (θ entiers).')(func)
    func = click.option('--theta', type=float, help='Seuil VIF θ (défaut 10).')(func)
    return func


def classifier_options(func):
    options = [
        click.option('--backend', 'backend_command', help='Commande du classifieur externe (protocole CSV).'),
        click.option('--backend-url', help='URL du classifieur HTTP.'),
        click.option('--epochs', type=int, default=300, show_default=True, help='Époques du baseline.'),
        click.option('--learning-rate', type=float, default=0.1, show_default=True, help='Pas du baseline.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _fail(message: str, exit_code: int):
    logger.error(f"❌ {message}")
    click.secho(f"Erreur: {message}", fg='red', bold=True, err=True)
    sys.exit(exit_code)


def _thetas(theta: Optional[float], theta_range: Optional[str], default_range: Optional[str] = None):
    if theta is not None and theta_range:
        _fail("--theta et --theta-range sont exclusifs", EXIT_USAGE)
    try:
        if theta_range or (theta is None and default_range):
            return parse_theta_range(theta_range or default_range)
    except ValueError as e:
        _fail(str(e), EXIT_USAGE)
    return [theta if theta is not None else 10.0]


def _classifier(seed: int, backend_command=None, backend_url=None, epochs=300, learning_rate=0.1):
    if backend_command and backend_url:
        _fail("--backend et --backend-url sont exclusifs", EXIT_USAGE)
    kind = ClassifierKind.LOGISTIC_BASELINE
    if backend_command:
        kind = ClassifierKind.EXTERNAL
    elif backend_url:
        kind = ClassifierKind.HTTP
    return dict(kind=kind, command=backend_command, url=backend_url, epochs=epochs,
                learning_rate=learning_rate, seed=seed, timeout=SETTINGS.backend_timeout)


def _build_config(**fields) -> RunConfig:
    """RunConfig validé ; toute erreur de paramètre sort avec le code 2."""
    seed = fields.pop('seed')
    classifier = fields.pop('classifier', None) or {}
    try:
        return RunConfig(
            cv_seed=seed,
            classifier=ClassifierSpec(**{'seed': seed, **classifier}),
            threads=SETTINGS.threads,
            **fields,
        )
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        _fail(f"Configuration invalide ({details})", EXIT_USAGE)


def _execute(command: str, config: RunConfig) -> dict:
    try:
        return BandPickOrchestrator(config).run(command)
    except BandpickError as e:
        _fail(str(e), e.exit_code)


def _echo_outputs(run_data: dict):
    for path in run_data["outputs"]:
        click.echo(f"  → {path}")


# ═══════════════════════════════════════════════════════════
# COMMANDES
# ═══════════════════════════════════════════════════════════

@click.group()
def cli():
    """Sélection de bandes hyperspectrales (IBRA + GSS) et simulation de filtres."""
    pass


@cli.command()
@dataset_options
@theta_options
def ibra(theta, theta_range, **kwargs):
    """Analyse de redondance inter-bandes : CSV + tracé SVG par θ."""
    config = _build_config(thetas=_thetas(theta, theta_range), **kwargs)
    run_data = _execute("ibra", config)
    for result in run_data["ibra"]:
        click.echo(f"θ={result.theta:g}: {len(result.candidates)} candidates {list(result.candidates)}")
    _echo_outputs(run_data)


@cli.command()
@dataset_options
@theta_options
@classifier_options
@click.option('--k', type=int, default=5, show_default=True, help='Nombre de bandes à sélectionner.')
@click.option('--bit-depth', type=int, default=14, show_default=True, help="Profondeur de quantification de l'entropie.")
@click.option('--entropy-on-normalized', is_flag=True, help='Entropie calculée après z-score.')
def gss(theta, theta_range, backend_command, backend_url, epochs, learning_rate, **kwargs):
    """IBRA → entropie → sélection gloutonne pour un θ (ou une plage)."""
    classifier = _classifier(kwargs['seed'], backend_command, backend_url, epochs, learning_rate)
    config = _build_config(thetas=_thetas(theta, theta_range), classifier=classifier, **kwargs)
    run_data = _execute("gss", config)
    _echo_reports(run_data)


@cli.command()
@dataset_options
@click.option('--theta-range', default=DEFAULT_SWEEP_RANGE, show_default=True, help='Plage θ LO:HI (θ entiers).')
@classifier_options
@click.option('--k', type=int, default=5, show_default=True, help='Nombre de bandes à sélectionner.')
@click.option('--bit-depth', type=int, default=14, show_default=True, help="Profondeur de quantification de l'entropie.")
@click.option('--entropy-on-normalized', is_flag=True, help='Entropie calculée après z-score.')
def sweep(theta_range, backend_command, backend_url, epochs, learning_rate, **kwargs):
    """Balayage de θ : une sélection par θ, classées par F1 décroissant."""
    classifier = _classifier(kwargs['seed'], backend_command, backend_url, epochs, learning_rate)
    config = _build_config(thetas=_thetas(None, theta_range), classifier=classifier, **kwargs)
    run_data = _execute("sweep", config)
    _echo_reports(run_data)


def _echo_reports(run_data: dict):
    for report in run_data["reports"]:
        if report.empty:
            click.echo(f"θ={report.theta:g} | aucune candidate")
            continue
        wavelengths = " ".join(f"{w:g}" for w in report.selected_wavelengths_nm)
        click.echo(f"θ={report.theta:g} | F1={report.best_f1:.4f} | bandes {report.selected} | {wavelengths} nm")
    click.secho(f"🏆 Gagnant - {winner_summary(run_data)}", fg='green', bold=True)
    _echo_outputs(run_data)


@cli.command()
@dataset_options
@theta_options
@classifier_options
@click.option('--bands', help='Liste explicite de bandes (ex: "3,9").')
def evaluate(theta, theta_range, backend_command, backend_url, epochs, learning_rate, bands, **kwargs):
    """Métriques 5×2 du spectre complet et des candidates IBRA (ou de --bands)."""
    classifier = _classifier(kwargs['seed'], backend_command, backend_url, epochs, learning_rate)
    try:
        band_list = bands_from_text(bands) or None
    except ValueError:
        _fail(f"Liste de bandes invalide: {bands}", EXIT_USAGE)
    config = _build_config(thetas=_thetas(theta, theta_range), classifier=classifier, bands=band_list, **kwargs)
    run_data = _execute("evaluate", config)
    for name, metrics in run_data["metrics"].items():
        std = metrics.std()
        click.echo(f"{name}: OA={metrics.oa:.4f}±{std['oa']:.4f} F1={metrics.macro_f1:.4f}±{std['macro_f1']:.4f}")
    _echo_outputs(run_data)


@cli.command()
@dataset_options
@classifier_options
@click.option('--report', 'report_path', type=click.Path(path_type=Path), required=True,
              help='selection.json produit par gss/sweep.')
@click.option('--fwhm-bands', type=float, default=5.0, show_default=True, help='FWHM des filtres en bandes.')
@click.option('--fwhm-nm', type=float, help='FWHM des filtres en nm (prioritaire sur --fwhm-bands).')
def simulate(backend_command, backend_url, epochs, learning_rate, **kwargs):
    """Simulation des filtres gaussiens et comparaison brut / simulé."""
    classifier = _classifier(kwargs['seed'], backend_command, backend_url, epochs, learning_rate)
    config = _build_config(classifier=classifier, **kwargs)
    run_data = _execute("simulate", config)
    for name, metrics in run_data["metrics"].items():
        click.echo(f"{name}: OA={metrics.oa:.4f} F1={metrics.macro_f1:.4f}")
    _echo_outputs(run_data)


@cli.command('gen-synthetic')
@click.option('--kind', type=click.Choice(sorted(GENERATORS)), default='planted', show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--per-class', type=int, default=200, show_default=True, help='Patches par classe.')
@click.option('--as-cube', is_flag=True, help='Écrit un cube HSC1 + carte d\'étiquettes au lieu de patches.')
@click.option('--out', 'out_dir', type=click.Path(path_type=Path), required=True, help='Répertoire de sortie.')
def gen_synthetic(kind, seed, per_class, as_cube, out_dir):
    """Génère un jeu de données à structure connue."""
    try:
        patch_set = GENERATORS[kind](seed=seed, per_class=per_class)
        if as_cube:
            cube, label_map = mosaic(patch_set)
            out_dir.mkdir(parents=True, exist_ok=True)
            save_cube(cube, out_dir / "cube.hsc")
            save_label_map(label_map, out_dir / "labels_map.csv")
        else:
            save_patch_set(patch_set, out_dir)
    except BandpickError as e:
        _fail(str(e), e.exit_code)
    except OSError as e:
        _fail(f"Écriture impossible dans {out_dir}: {e}", 1)
    click.secho(f"✅ Jeu '{kind}' écrit dans {out_dir}", fg='green')


@cli.command()
@click.option('--input', 'input_path', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='CSV produit par la commande ibra.')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False, path_type=Path), required=True,
              help='Fichier SVG à écrire.')
@click.option('--title', default='', help='Titre du tracé.')
def plot(input_path, out_path, title):
    """Retrace le SVG d(longueur d'onde) depuis un CSV IBRA."""
    try:
        frame = read_ibra_csv(input_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(render_distance_svg(frame, title), encoding="utf-8")
    except BandpickError as e:
        _fail(str(e), e.exit_code)
    except OSError as e:
        _fail(f"Écriture impossible de {out_path}: {e}", 1)
    click.echo(f"  → {out_path}")


if __name__ == '__main__':
    cli()
