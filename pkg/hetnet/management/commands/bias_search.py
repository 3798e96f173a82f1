from dataclasses import replace

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from hetnet.experiments import FUA, MAX_SINR, RATE_BIAS, SINR_BIAS, export_report, run_comparison
from hetnet.management.base import SimulationCommand


class Command(SimulationCommand):
    help = 'Search SINR biasing factors on a dB grid and derive rate biasing factors from dual prices'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--db-min', type=float, help='Lowest SINR bias in dB')
        parser.add_argument('--db-max', type=float, help='Highest SINR bias in dB')
        parser.add_argument('--db-step', type=float, help='SINR bias grid step in dB')

    def handle(self, *args, **options):
        config = self.load_config(options)
        low, high, step = config.grid_db
        grid = (
            low if options['db_min'] is None else options['db_min'],
            high if options['db_max'] is None else options['db_max'],
            step if options['db_step'] is None else options['db_step'],
        )
        schemes = config.schemes if options.get('schemes') else (MAX_SINR, FUA, SINR_BIAS, RATE_BIAS)
        try:
            config = replace(config, schemes=schemes, grid_db=grid, bias=None)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages))

        report = run_comparison(config)
        out_dir = self.output_dir(options, config)
        export_report(report, out_dir)

        if report.sinr_bias is not None:
            found = ', '.join(f"{db:.1f}" for db in report.sinr_bias.bias.sinr_db)
            self.stdout.write(f"SINR bias (dB): {found} over {report.sinr_bias.n_candidates} candidates")
            if report.sinr_bias.fua_gap is not None:
                self.stdout.write(f"Utility gap to FUA: {report.sinr_bias.fua_gap:.4f}")
        if report.rate_bias is not None:
            found = ', '.join(f"{b:.3f}" for b in report.rate_bias.rate_factors)
            self.stdout.write(f"Rate bias: {found}")
        self.write_scheme_table(report)
        self.stdout.write(self.style.SUCCESS(f"\nWrote bias search results to {out_dir}"))
        if options['record']:
            self.record(report, config, options, out_dir)
        self.check_report(report, options['strict'])
