import math

from django.db import models, transaction


class ExperimentRunManager(models.Manager):
    """Custom manager for ExperimentRun with report storage."""

    def record_report(self, report, command, config=None, label='', out_dir='', status=None):
        """
        Store a MetricsReport and one SchemeResult per scheme in a single transaction.
        """
        if status is None:
            status = ExperimentRun.STATUS_VIOLATION if report.violations else ExperimentRun.STATUS_OK
        with transaction.atomic():
            run = self.create(
                command=command,
                label=label,
                seed_base=report.seed_base,
                trials=report.trials,
                config=config.to_dict() if config is not None else {},
                summary=report.summary(),
                status=status,
                out_dir=str(out_dir or ''),
            )
            SchemeResult.objects.bulk_create([
                SchemeResult.from_metrics(run, metrics) for metrics in report.schemes
            ])
        return run


class ExperimentRun(models.Model):
    STATUS_OK = 'ok'
    STATUS_NOT_CONVERGED = 'not_converged'
    STATUS_VIOLATION = 'violation'
    STATUSES = [
        (STATUS_OK, 'OK'),
        (STATUS_NOT_CONVERGED, 'Not converged'),
        (STATUS_VIOLATION, 'Invariant violation'),
    ]

    command = models.CharField(max_length=30)
    label = models.CharField(max_length=100, blank=True)
    seed_base = models.PositiveIntegerField(default=0)
    trials = models.PositiveIntegerField(default=1)
    config = models.JSONField(default=dict, blank=True)
    summary = models.JSONField(default=dict, blank=True)
    status = models.CharField(max_length=20, choices=STATUSES, default=STATUS_OK)
    out_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    objects = ExperimentRunManager()

    class Meta:
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['command', '-created_at'], name='run_command_recent_idx'),
        ]

    def __str__(self):
        return f"{self.command} #{self.pk} ({self.trials} trials, seed {self.seed_base})"


class SchemeResult(models.Model):
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='results')
    scheme = models.CharField(max_length=30)
    mean_utility = models.FloatField()
    macro_load = models.FloatField(help_text="Mean number of users on the macro tier")
    rate_p10 = models.FloatField()
    rate_p50 = models.FloatField()
    ratio_p10 = models.FloatField(blank=True, null=True)
    ratio_p50 = models.FloatField(blank=True, null=True)
    not_converged = models.PositiveIntegerField(default=0)

    class Meta:
        ordering = ['run', 'id']
        constraints = [
            models.UniqueConstraint(fields=['run', 'scheme'], name='unique_scheme_per_run'),
        ]

    def __str__(self):
        return f"{self.scheme}: U={self.mean_utility:.3f}"

    @classmethod
    def from_metrics(cls, run, metrics):
        """Unsaved row for one scheme of a report."""
        from .experiments import rate_cdf

        def finite(value):
            return value if value is not None and math.isfinite(value) else None

        p10, p50 = rate_cdf(metrics.rates, [10, 50])
        return cls(
            run=run,
            scheme=metrics.name,
            mean_utility=metrics.mean_utility,
            macro_load=metrics.tier_loads[0],
            rate_p10=float(p10),
            rate_p50=float(p50),
            ratio_p10=finite(metrics.ratios.get(10)),
            ratio_p50=finite(metrics.ratios.get(50)),
            not_converged=metrics.not_converged,
        )