from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from hetnet.experiments import SWEEP_DENSITY, SWEEP_PARAMETERS, bias_sweep, export_sweep
from hetnet.management.base import SimulationCommand, _float_list


class Command(SimulationCommand):
    help = "Re-derive biasing factors while one tier's density or transmit power varies"
    options_used = ('trials', 'tol')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--parameter', choices=sorted(SWEEP_PARAMETERS), default=SWEEP_DENSITY)
        parser.add_argument('--tier', type=int, default=1, help='Tier index (0 is the macro tier)')
        parser.add_argument(
            '--values',
            type=_float_list,
            required=True,
            help='Comma-separated counts per macro cell (density) or powers in dBm (power)',
        )
        parser.add_argument(
            '--with-sinr-search',
            action='store_true',
            help='Also run the SINR bias grid search at every point',
        )

    def handle(self, *args, **options):
        config = self.load_config(options)
        try:
            sweep = bias_sweep(
                config,
                options['parameter'],
                options['tier'],
                options['values'],
                with_sinr_search=options['with_sinr_search'],
            )
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages))

        out_dir = self.output_dir(options, config)
        path = export_sweep(sweep, out_dir)

        names = [tier.name for tier in config.scenario.tiers]
        self.stdout.write(f"\n{options['parameter']:>10}" + ''.join(f"{'B_' + n:>12}" for n in names))
        for point in sweep.points:
            self.stdout.write(f"{point.value:>10g}" + ''.join(f"{b:>12.3f}" for b in point.rate_bias.rate_factors))
        self.stdout.write(self.style.SUCCESS(f"\nWrote {path}"))
