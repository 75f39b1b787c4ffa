from django.contrib import admin
from kinetic.models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'experiment', 'config_hash', 'seed', 'status', 'created')
    list_filter = ('experiment', 'status')
