from django.contrib import admin

from .models import ExperimentRun, SchemeResult


class SchemeResultInline(admin.TabularInline):
    model = SchemeResult
    extra = 0
    can_delete = False
    readonly_fields = (
        'scheme', 'mean_utility', 'macro_load', 'rate_p10', 'rate_p50',
        'ratio_p10', 'ratio_p50', 'not_converged',
    )


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'command', 'label', 'trials', 'seed_base', 'status', 'scheme_count', 'created_at')
    list_filter = ('command', 'status')
    search_fields = ('label', 'out_dir')
    readonly_fields = ('created_at', 'config', 'summary')
    inlines = [SchemeResultInline]

    def scheme_count(self, obj):
        return obj.results.count()
    scheme_count.short_description = 'Schemes'


@admin.register(SchemeResult)
class SchemeResultAdmin(admin.ModelAdmin):
    list_display = ('run', 'scheme', 'mean_utility', 'macro_load', 'ratio_p10', 'ratio_p50', 'not_converged')
    list_filter = ('scheme',)
    search_fields = ('run__label', 'scheme')
