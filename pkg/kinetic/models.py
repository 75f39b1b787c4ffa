from pathlib import Path

from django.db import models

from kinetic.config import EXPERIMENT_NAMES

STATUS_RUNNING = 'running'
STATUS_COMPLETED = 'completed'
STATUS_FAILED = 'failed'
STATUS_CHOICES = [(x, x) for x in (STATUS_RUNNING, STATUS_COMPLETED, STATUS_FAILED)]


class ExperimentRun(models.Model):
    """Registry entry for one `boltzgap` run."""
    id = models.AutoField(primary_key=True)
    experiment = models.CharField(
        'Experiment',
        choices=zip(EXPERIMENT_NAMES, EXPERIMENT_NAMES),
        max_length=32,
    )
    config_hash = models.CharField('Config hash', max_length=16)
    seed = models.PositiveIntegerField('Seed', default=0)
    output_dir = models.CharField('Output directory', max_length=500)
    status = models.CharField(
        'Status',
        choices=STATUS_CHOICES,
        max_length=16,
        default=STATUS_RUNNING,
    )
    summary = models.JSONField('Summary', default=dict, blank=True)
    created = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f'{self.id}. {self.experiment} [{self.config_hash}]'

    @property
    def report_path(self) -> Path:
        return Path(self.output_dir) / 'report.md'

    def passed(self):
        """True when every pass flag in the summary is set; None before completion."""
        flags = self.summary.get('pass_flags') if self.summary else None
        if not flags:
            return None
        return all(flags.values())

    def finish(self, status: str, summary: dict = None):
        self.status = status
        if summary is not None:
            self.summary = summary
        self.save()
