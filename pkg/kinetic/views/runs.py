from pathlib import Path

from django.http import Http404
from django.shortcuts import get_object_or_404
from django.views.generic import ListView, TemplateView

from kinetic.models import ExperimentRun
from kinetic.output import render_markdown

ABOUT_PATH = Path(__file__).resolve().parent.parent / 'templates' / 'kinetic' / 'about.md'


class RunListView(ListView):
    model = ExperimentRun
    template_name = 'kinetic/runs.html'
    context_object_name = 'runs'
    ordering = ['-created']
    paginate_by = 50


class RunReportView(TemplateView):
    """Rendered report.md of one run."""
    template_name = 'kinetic/report.html'

    def get_context_data(self, **kwargs):
        context = super().get_context_data(**kwargs)
        run = get_object_or_404(ExperimentRun, pk=kwargs['run_id'])
        if not run.report_path.exists():
            raise Http404('report not written yet')
        context['run'] = run
        context['report'] = render_markdown(run.report_path.read_text(encoding='utf-8'))
        return context


class AboutView(TemplateView):
    template_name = 'kinetic/about.html'

    def get_context_data(self, **kwargs):
        context = super().get_context_data(**kwargs)
        context['about'] = render_markdown(ABOUT_PATH.read_text(encoding='utf-8'))
        return context
