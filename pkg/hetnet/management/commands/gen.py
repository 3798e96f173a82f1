from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from hetnet.exporters import export_links, export_scenario
from hetnet.management.base import SimulationCommand
from hetnet.topology import compute_link_table, generate_scenario


class Command(SimulationCommand):
    help = 'Generate one scenario and write scenario.json and links.csv'
    options_used = ()

    def handle(self, *args, **options):
        config = self.load_config(options)
        seed = config.trial_seed(0)
        try:
            scenario = generate_scenario(config.scenario, seed=seed)
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages))
        links = compute_link_table(scenario)

        out_dir = self.output_dir(options, config)
        export_scenario(scenario, out_dir / 'scenario.json')
        export_links(links, out_dir / 'links.csv')

        counts = ', '.join(
            f"{tier.name}={count}" for tier, count in zip(config.scenario.tiers, scenario.tier_counts())
        )
        self.stdout.write(f"Scenario seed {seed}: {scenario.n_bs} base stations ({counts}), {scenario.n_users} users")
        self.stdout.write(self.style.SUCCESS(f"Wrote scenario.json and links.csv to {out_dir}"))
