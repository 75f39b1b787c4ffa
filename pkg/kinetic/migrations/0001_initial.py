# Generated by Django 4.2 on 2026-10-19 12:00

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.AutoField(primary_key=True, serialize=False)),
                ('experiment', models.CharField(choices=[('ode', 'ode'), ('norm-equivalence', 'norm-equivalence'), ('symbol', 'symbol'), ('semigroup', 'semigroup'), ('commutator', 'commutator'), ('operator-diff', 'operator-diff')], max_length=32, verbose_name='Experiment')),
                ('config_hash', models.CharField(max_length=16, verbose_name='Config hash')),
                ('seed', models.PositiveIntegerField(default=0, verbose_name='Seed')),
                ('output_dir', models.CharField(max_length=500, verbose_name='Output directory')),
                ('status', models.CharField(choices=[('running', 'running'), ('completed', 'completed'), ('failed', 'failed')], default='running', max_length=16, verbose_name='Status')),
                ('summary', models.JSONField(blank=True, default=dict, verbose_name='Summary')),
                ('created', models.DateTimeField(auto_now_add=True)),
            ],
        ),
    ]
