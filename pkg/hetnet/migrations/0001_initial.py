# Generated by Django 4.2.23 on 2026-10-16 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=30)),
                ('label', models.CharField(blank=True, max_length=100)),
                ('seed_base', models.PositiveIntegerField(default=0)),
                ('trials', models.PositiveIntegerField(default=1)),
                ('config', models.JSONField(blank=True, default=dict)),
                ('summary', models.JSONField(blank=True, default=dict)),
                ('status', models.CharField(choices=[('ok', 'OK'), ('not_converged', 'Not converged'), ('violation', 'Invariant violation')], default='ok', max_length=20)),
                ('out_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='SchemeResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scheme', models.CharField(max_length=30)),
                ('mean_utility', models.FloatField()),
                ('macro_load', models.FloatField(help_text='Mean number of users on the macro tier')),
                ('rate_p10', models.FloatField()),
                ('rate_p50', models.FloatField()),
                ('ratio_p10', models.FloatField(blank=True, null=True)),
                ('ratio_p50', models.FloatField(blank=True, null=True)),
                ('not_converged', models.PositiveIntegerField(default=0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='hetnet.experimentrun')),
            ],
            options={
                'ordering': ['run', 'id'],
            },
        ),
        migrations.AddIndex(
            model_name='experimentrun',
            index=models.Index(fields=['command', '-created_at'], name='run_command_recent_idx'),
        ),
        migrations.AddConstraint(
            model_name='schemeresult',
            constraint=models.UniqueConstraint(fields=('run', 'scheme'), name='unique_scheme_per_run'),
        ),
    ]
