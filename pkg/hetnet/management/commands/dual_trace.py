from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from hetnet.dual_solver import StepsizeParams, run_dual
from hetnet.experiments import rate_bias_from_duals, trial_links
from hetnet.exporters import export_association, export_dual_prices, export_dual_trace, export_fw_trace
from hetnet.fua_solver import solve_fua
from hetnet.management.base import SimulationCommand


class Command(SimulationCommand):
    help = 'Run the distributed dual algorithm on one scenario and export its per-round trace'
    options_used = ('tol', 'strict')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--max-iter', type=int, help='Maximum number of rounds')
        parser.add_argument('--gamma', type=float, help='Stepsize relaxation factor in (0, 2)')

    def handle(self, *args, **options):
        config = self.load_config(options)
        links = trial_links(config, 0)
        try:
            params = StepsizeParams.from_settings(
                **({'gamma': options['gamma']} if options['gamma'] is not None else {})
            )
            fua = solve_fua(links, tol=config.fua_tol, max_iter=config.fua_max_iter)
            result = run_dual(
                links,
                params=params,
                max_iter=options['max_iter'] or config.dual_max_iter,
                reference_value=fua.utility + fua.gap,
            )
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages))

        out_dir = self.output_dir(options, config)
        export_dual_trace(result.trace, out_dir / 'dual_trace.csv')
        export_dual_prices(result, links, out_dir / 'dual_prices.csv')
        export_association(result.association, out_dir / 'association.csv')
        export_fw_trace(fua.trace, out_dir / 'fua_trace.csv')

        last = result.trace.records[-1]
        self.stdout.write(
            f"{len(result.trace)} rounds ({result.reason}, first balanced at {result.balanced_at}), "
            f"best dual {result.trace.best_dual:.4f}, "
            f"FUA {fua.utility:.4f}, final primal {last.primal_utility:.4f}, "
            f"{result.trace.messages} messages"
        )
        bias = rate_bias_from_duals([result], [links], config.scenario.n_tiers)
        self.stdout.write("Rate bias from prices: " + ', '.join(f"{b:.3f}" for b in bias.rate_factors))
        if result.unbalanced:
            self.stdout.write(self.style.WARNING(f"Unbalanced BSs: {list(result.unbalanced)}"))
        self.stdout.write(self.style.SUCCESS(f"Wrote the dual and FUA traces, prices and association to {out_dir}"))

        if options['strict'] and not result.converged:
            raise CommandError(f"Dual algorithm did not converge ({result.reason}, bound met: {result.dual_bound_met})")
