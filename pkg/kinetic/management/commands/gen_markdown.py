"""Re-render report.html of every registered run from its report.md."""
from pathlib import Path

from django.core.management.base import BaseCommand

from kinetic.models import ExperimentRun
from kinetic.output import render_markdown


def convert_to_html(path: Path, new_name='report.html') -> Path:
    new_path = path.parent / new_name
    new_path.write_text(render_markdown(path.read_text(encoding='utf-8')), encoding='utf-8')
    return new_path


def build() -> int:
    count = 0
    for run in ExperimentRun.objects.all():
        if run.report_path.exists():
            convert_to_html(run.report_path)
            count += 1
    return count


class Command(BaseCommand):
    help = 'Rebuild html reports from markdown'

    def handle(self, *args, **kwargs):
        count = build()
        self.stdout.write(f'rendered {count} reports')
