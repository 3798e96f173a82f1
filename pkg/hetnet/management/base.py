"""
Shared options for the simulator's management commands.
"""

import json
from dataclasses import replace
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from hetnet.conf import get_setting
from hetnet.experiments import ExperimentConfig
from hetnet.topology import ScenarioConfig, macro_only


def _comma_list(value):
    return [item.strip() for item in value.split(',') if item.strip()]


def _float_list(value):
    try:
        return [float(item) for item in _comma_list(value)]
    except ValueError:
        raise CommandError(f"Expected a comma-separated list of numbers, got '{value}'.")


class SimulationCommand(BaseCommand):
    """
    Base for commands that read an experiment (or bare scenario) config.

    Subclasses list the optional flags they support in ``options_used``.
    """
    options_used = ('trials', 'schemes', 'tol', 'strict', 'record')

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Experiment or scenario config JSON file')
        parser.add_argument('--seed', type=int, help='Seed base (trial t uses seed + t)')
        parser.add_argument('--out', help='Output directory')
        if 'trials' in self.options_used:
            parser.add_argument('--trials', type=int, help='Number of trials')
        if 'schemes' in self.options_used:
            parser.add_argument('--schemes', type=_comma_list, help='Comma-separated scheme names')
        if 'tol' in self.options_used:
            parser.add_argument('--tol', type=float, help='Frank-Wolfe gap tolerance')
        if 'strict' in self.options_used:
            parser.add_argument(
                '--strict',
                action='store_true',
                help='Exit with an error on invariant violations or solver non-convergence',
            )
        if 'record' in self.options_used:
            parser.add_argument('--record', action='store_true', help='Store the report in the database')
            parser.add_argument('--label', default='', help='Label for the recorded run')

    def load_config(self, options):
        """ExperimentConfig from --config plus command-line overrides."""
        try:
            config = self._read_config(options.get('config'))
            changes = {}
            if options.get('seed') is not None:
                changes['seed_base'] = options['seed']
            if options.get('trials') is not None:
                changes['trials'] = options['trials']
            if options.get('schemes'):
                changes['schemes'] = tuple(options['schemes'])
            if options.get('tol') is not None:
                changes['fua_tol'] = options['tol']
            if options.get('macro_only'):
                changes['scenario'] = macro_only(config.scenario)
            return replace(config, **changes) if changes else config
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages))

    def _read_config(self, path):
        if not path:
            return ExperimentConfig()
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except OSError as exc:
            raise CommandError(f"Cannot read {path}: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise CommandError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})")
        if isinstance(data, dict) and 'tiers' in data:
            return ExperimentConfig(scenario=ScenarioConfig.from_dict(data))
        return ExperimentConfig.from_dict(data, base_dir=path.parent)

    def output_dir(self, options, config=None):
        if options.get('out'):
            return Path(options['out'])
        if config is not None and config.out_dir:
            return Path(config.out_dir)
        return Path(get_setting('OUTPUT_DIR')) / self.command_name

    @property
    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def check_report(self, report, strict):
        """Print violations and non-convergence; fail under --strict."""
        for message in report.violations:
            self.stdout.write(self.style.ERROR(f"Invariant violation: {message}"))
        if report.not_converged:
            self.stdout.write(self.style.WARNING(f"{report.not_converged} solver runs did not converge"))
        if strict and (report.violations or report.not_converged):
            raise CommandError(
                f"{len(report.violations)} invariant violations, {report.not_converged} non-converged runs"
            )

    def record(self, report, config, options, out_dir):
        from hetnet.models import ExperimentRun

        status = None
        if not report.violations and report.not_converged:
            status = ExperimentRun.STATUS_NOT_CONVERGED
        run = ExperimentRun.objects.record_report(
            report, self.command_name, config=config, label=options.get('label', ''),
            out_dir=out_dir, status=status,
        )
        self.stdout.write(self.style.SUCCESS(f"Recorded run #{run.pk}"))
        return run

    def write_scheme_table(self, report):
        self.stdout.write(f"\n{'scheme':<15}{'utility':>12}{'macro load':>12}{'ratio p10':>11}{'ratio p50':>11}")
        for metrics in report.schemes:
            ratios = [metrics.ratios.get(p) for p in (10, 50)]
            cells = ''.join(f"{'-' if r is None else f'{r:.3f}':>11}" for r in ratios)
            self.stdout.write(
                f"{metrics.name:<15}{metrics.mean_utility:>12.3f}{metrics.tier_loads[0]:>12.2f}{cells}"
            )
