from hetnet.experiments import export_report, run_comparison
from hetnet.management.base import SimulationCommand


class Command(SimulationCommand):
    help = 'Compare association schemes over seeded trials and export the metrics'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--macro-only',
            action='store_true',
            help='Drop every small-cell tier from the scenario',
        )
        parser.add_argument('--xlsx', action='store_true', help='Also write report.xlsx')

    def handle(self, *args, **options):
        config = self.load_config(options)
        self.stdout.write(
            f"Running {config.trials} trials from seed {config.seed_base}: {', '.join(config.schemes) or 'no schemes'}"
        )
        report = run_comparison(config)
        out_dir = self.output_dir(options, config)
        written = export_report(report, out_dir, xlsx=options['xlsx'])

        if report.schemes:
            self.write_scheme_table(report)
        self.stdout.write(self.style.SUCCESS(f"\nWrote {len(written)} files to {out_dir}"))
        if options['record']:
            self.record(report, config, options, out_dir)
        self.check_report(report, options['strict'])
