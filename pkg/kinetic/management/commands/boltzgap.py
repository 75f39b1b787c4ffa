"""Run one laboratory experiment and write its CSV tables, summary and report."""
import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from kinetic import output
from kinetic.config import EXPERIMENT_NAMES, layered_defaults, read_config_file
from kinetic.errors import BoltzlabError, StabilityError
from kinetic.experiments import run_experiment, summary_for, write_outputs
from kinetic.forms import ExperimentConfigForm
from kinetic.models import STATUS_COMPLETED, STATUS_FAILED, ExperimentRun

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_STABILITY = 3

# Command-line flag -> form field.
FLAGS = {
    'eps_list': 'eps_list',
    's': 's',
    'gamma': 'gamma',
    'grid_n': 'grid_n',
    'half_width': 'half_width',
    'seed': 'seed',
    'total_time': 'total_time',
    'dt': 'dt',
}


def error_line(kind: str, message) -> str:
    """Single-line JSON for the diagnostic stream."""
    return json.dumps({'error': kind, 'message': str(message)}, sort_keys=True)


def form_message(form) -> str:
    parts = []
    for name, errors in form.errors.items():
        label = 'config' if name == '__all__' else name
        parts.extend(f'{label}: {e}' for e in errors)
    return '; '.join(parts)


def build_config(experiment: str, options: dict):
    """Layer settings defaults, the config file and command-line flags, then validate."""
    data = layered_defaults(experiment)
    if options.get('config'):
        path = Path(options['config'])
        if not path.exists():
            raise CommandError(error_line('config', f'config file {path} not found'),
                               returncode=EXIT_CONFIG)
        from_file = read_config_file(path)
        if from_file.get('experiment', experiment) != experiment:
            raise CommandError(error_line('config', f'{path} configures '
                                          f'{from_file["experiment"]}, not {experiment}'),
                               returncode=EXIT_CONFIG)
        if 'eps' in from_file:
            from_file['eps_list'] = from_file.pop('eps')
        data.update(from_file)
    if options.get('eps') is not None:
        data['eps_list'] = repr(options['eps'])
    for flag, key in FLAGS.items():
        if options.get(flag) is not None:
            data[key] = options[flag]
    data['experiment'] = experiment

    form = ExperimentConfigForm(data)
    if not form.is_valid():
        raise CommandError(error_line('config', form_message(form)), returncode=EXIT_CONFIG)
    return form.to_config()


class Command(BaseCommand):
    help = 'Run a linearized Boltzmann laboratory experiment'

    def add_arguments(self, parser):
        parser.add_argument('experiment', choices=EXPERIMENT_NAMES)
        parser.add_argument('--config', help='flat KEY=value file')
        parser.add_argument('--eps', type=float, help='single cutoff value')
        parser.add_argument('--eps-list', help="comma list or range such as '2^-3..2^-6'")
        parser.add_argument('--s', type=float)
        parser.add_argument('--gamma', type=float)
        parser.add_argument('--grid-n', type=int)
        parser.add_argument('--half-width', type=float)
        parser.add_argument('--total-time', type=float)
        parser.add_argument('--dt', type=float)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--out', help='output directory')
        parser.add_argument('--workers', type=int, default=None)

    def handle(self, *args, **options):
        experiment = options['experiment']
        config = build_config(experiment, options)
        out_dir = Path(options.get('out') or
                       Path(settings.BOLTZLAB_OUTPUT_DIR) / f'{experiment}-{config.config_hash}')

        existing = output.read_summary(out_dir)
        if existing is not None and existing.get('config_hash') != config.config_hash:
            raise CommandError(
                error_line('config', f'{out_dir} holds results of config '
                           f'{existing.get("config_hash")}, not {config.config_hash}'),
                returncode=EXIT_CONFIG)

        workers = options.get('workers') or settings.BOLTZLAB_WORKERS
        run = ExperimentRun.objects.create(experiment=experiment, config_hash=config.config_hash,
                                           seed=config.seed, output_dir=str(out_dir))
        try:
            result = run_experiment(config, workers)
        except StabilityError as exc:
            run.finish(STATUS_FAILED, {'error': str(exc)})
            raise CommandError(error_line('stability', exc), returncode=EXIT_STABILITY)
        except BoltzlabError as exc:
            run.finish(STATUS_FAILED, {'error': str(exc)})
            raise CommandError(error_line(type(exc).__name__, exc), returncode=EXIT_CONFIG)

        write_outputs(config, result, out_dir)
        summary = summary_for(config, result)
        run.finish(STATUS_COMPLETED, output._jsonable(summary))
        failed = sorted(k for k, v in result.pass_flags.items() if not v)
        if failed:
            logger.warning('%s: failed checks %s', experiment, ', '.join(failed))
        self.stdout.write(f'{experiment} [{config.config_hash}] -> {out_dir}')
