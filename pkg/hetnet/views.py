import csv

from django.contrib.auth.decorators import login_required
from django.http import HttpResponse, JsonResponse
from django.shortcuts import get_object_or_404
from openpyxl import Workbook

from .models import ExperimentRun

RESULT_HEADER = [
    'Scheme', 'Mean Utility', 'Macro Load', 'Rate P10', 'Rate P50',
    'Ratio P10', 'Ratio P50', 'Not Converged',
]


def _result_row(result):
    return [
        result.scheme,
        result.mean_utility,
        result.macro_load,
        result.rate_p10,
        result.rate_p50,
        result.ratio_p10,
        result.ratio_p50,
        result.not_converged,
    ]


@login_required
def run_list(request):
    """Recorded runs, newest first, optionally filtered by ?command=."""
    runs = ExperimentRun.objects.prefetch_related('results')
    command = request.GET.get('command')
    if command:
        runs = runs.filter(command=command)
    data = [
        {
            'id': run.pk,
            'command': run.command,
            'label': run.label,
            'trials': run.trials,
            'seed_base': run.seed_base,
            'status': run.status,
            'created_at': run.created_at.isoformat(),
            'schemes': {r.scheme: r.mean_utility for r in run.results.all()},
        }
        for run in runs
    ]
    return JsonResponse({'runs': data})


@login_required
def export_run_csv(request, pk):
    run = get_object_or_404(ExperimentRun, pk=pk)
    response = HttpResponse(content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="run_{run.pk}.csv"'

    writer = csv.writer(response)
    writer.writerow(RESULT_HEADER)
    for result in run.results.all():
        writer.writerow(_result_row(result))

    return response


@login_required
def export_run_excel(request, pk):
    run = get_object_or_404(ExperimentRun, pk=pk)
    response = HttpResponse(content_type='application/vnd.openxmlformats-officedocument.spreadsheetml.sheet')
    response['Content-Disposition'] = f'attachment; filename="run_{run.pk}.xlsx"'

    workbook = Workbook()
    sheet = workbook.active
    sheet.title = f'Run {run.pk}'
    sheet.append(RESULT_HEADER)
    for result in run.results.all():
        sheet.append(_result_row(result))

    summary = workbook.create_sheet('Summary')
    summary.append(['Command', run.command])
    summary.append(['Label', run.label])
    summary.append(['Trials', run.trials])
    summary.append(['Seed Base', run.seed_base])
    summary.append(['Status', run.get_status_display()])
    summary.append(['Created', run.created_at.strftime('%Y-%m-%d %H:%M')])

    workbook.save(response)
    return response
