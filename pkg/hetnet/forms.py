from django import forms
from django.core.exceptions import ValidationError

from .exceptions import InvalidConfigError


LAYOUT_CHOICES = [('hex', 'Hexagonal grid'), ('single', 'Single macro cell')]
COUNT_MODE_CHOICES = [('fixed', 'Fixed count per macro cell'), ('poisson', 'Poisson count per macro cell')]


def _raise_form_errors(form, prefix):
    messages = []
    for field, errors in form.errors.items():
        label = prefix if field == '__all__' else f"{prefix}.{field}"
        for error in errors:
            messages.append(f"{label}: {error}")
    raise InvalidConfigError(messages)


class TierForm(forms.Form):
    """One tier entry of a scenario config."""
    name = forms.CharField(max_length=40, required=False)
    power_dbm = forms.FloatField()
    pathloss_intercept_db = forms.FloatField()
    pathloss_slope_db = forms.FloatField()
    count_per_macro = forms.FloatField(required=False, min_value=0)
    density = forms.FloatField(required=False, min_value=0)

    def clean_pathloss_slope_db(self):
        slope = self.cleaned_data.get('pathloss_slope_db')
        if slope is not None and slope <= 0:
            raise ValidationError("Path-loss slope must be greater than 0.")
        return slope

    def clean(self):
        cleaned_data = super().clean()
        count = cleaned_data.get('count_per_macro')
        density = cleaned_data.pop('density', None)
        if count is not None and density is not None and count != density:
            raise ValidationError("Give either count_per_macro or density, not both.")
        cleaned_data['count_per_macro'] = count if count is not None else (density or 0.0)
        return cleaned_data


class ScenarioConfigForm(forms.Form):
    """Scalar fields of a scenario config; tiers and layout are nested."""
    region_m = forms.FloatField(required=False)
    layout_kind = forms.ChoiceField(choices=LAYOUT_CHOICES, required=False)
    layout_rings = forms.IntegerField(required=False, min_value=0)
    layout_count = forms.IntegerField(required=False, min_value=1)
    layout_isd_m = forms.FloatField(required=False)
    layout_wraparound = forms.NullBooleanField(required=False)
    shadowing_db = forms.FloatField(required=False, min_value=0)
    noise_dbm = forms.FloatField(required=False)
    bandwidth_hz = forms.FloatField(required=False)
    n_users = forms.IntegerField(required=False, min_value=0)
    users_per_macro = forms.FloatField(required=False, min_value=0)
    count_mode = forms.ChoiceField(choices=COUNT_MODE_CHOICES, required=False)
    seed = forms.IntegerField(required=False, min_value=0)

    def clean_region_m(self):
        region = self.cleaned_data.get('region_m')
        if region is None:
            return 1000.0
        if region <= 0:
            raise ValidationError("Region size must be greater than 0.")
        return region

    def clean_layout_isd_m(self):
        isd = self.cleaned_data.get('layout_isd_m')
        if isd is None:
            return 500.0
        if isd <= 0:
            raise ValidationError("Inter-site distance must be greater than 0.")
        return isd

    def clean_n_users(self):
        n_users = self.cleaned_data.get('n_users')
        if n_users == 0:
            raise ValidationError("A scenario needs at least one user.")
        return n_users

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('n_users') is None and not cleaned_data.get('users_per_macro'):
            if 'n_users' not in self.errors:
                raise ValidationError("Give n_users or a positive users_per_macro.")
        return cleaned_data


def clean_scenario_config(data):
    """
    Validate a scenario config dict (the JSON file format) and return plain
    cleaned values with defaults filled in.

    Raises:
        InvalidConfigError: With one message per offending field
    """
    if not isinstance(data, dict):
        raise InvalidConfigError("Scenario config must be a JSON object.")
    layout = data.get('macro_layout') or {}
    if not isinstance(layout, dict):
        raise InvalidConfigError("macro_layout must be an object.")
    form = ScenarioConfigForm({
        'region_m': data.get('region_m'),
        'layout_kind': layout.get('kind') or 'hex',
        'layout_rings': layout.get('rings'),
        'layout_count': layout.get('count'),
        'layout_isd_m': layout.get('isd_m'),
        'layout_wraparound': layout.get('wraparound'),
        'shadowing_db': data.get('shadowing_db'),
        'noise_dbm': data.get('noise_dbm'),
        'bandwidth_hz': data.get('bandwidth_hz'),
        'n_users': data.get('n_users'),
        'users_per_macro': data.get('users_per_macro'),
        'count_mode': data.get('count_mode') or 'fixed',
        'seed': data.get('seed'),
    })
    if not form.is_valid():
        _raise_form_errors(form, 'scenario')
    scalars = form.cleaned_data

    tiers_data = data.get('tiers')
    if not tiers_data:
        raise InvalidConfigError("scenario.tiers: at least one tier is required.")
    tiers = []
    for index, tier_data in enumerate(tiers_data):
        tier_form = TierForm(tier_data if isinstance(tier_data, dict) else {})
        if not tier_form.is_valid():
            _raise_form_errors(tier_form, f'scenario.tiers[{index}]')
        tier = dict(tier_form.cleaned_data)
        tier['name'] = tier['name'] or f'tier{index + 1}'
        tiers.append(tier)

    rings = scalars['layout_rings']
    if scalars['layout_count'] is not None:
        from .topology import MacroLayout

        counted = MacroLayout.rings_for_count(scalars['layout_count'])
        if rings is not None and rings != counted:
            raise InvalidConfigError("scenario.macro_layout: rings and count disagree.")
        rings = counted
    wraparound = scalars['layout_wraparound']

    return {
        'region_m': scalars['region_m'],
        'macro_layout': {
            'kind': scalars['layout_kind'] or 'hex',
            'rings': 1 if rings is None else rings,
            'isd_m': scalars['layout_isd_m'],
            'wraparound': True if wraparound is None else wraparound,
        },
        'tiers': tiers,
        'shadowing_db': 8.0 if scalars['shadowing_db'] is None else scalars['shadowing_db'],
        'noise_dbm': -104.0 if scalars['noise_dbm'] is None else scalars['noise_dbm'],
        'bandwidth_hz': scalars['bandwidth_hz'] or 10e6,
        'n_users': scalars['n_users'],
        'users_per_macro': scalars['users_per_macro'],
        'count_mode': scalars['count_mode'] or 'fixed',
        'seed': scalars['seed'] or 0,
    }


class ExperimentConfigForm(forms.Form):
    """Scalar fields of an experiment config."""
    trials = forms.IntegerField(required=False, min_value=1)
    seed_base = forms.IntegerField(required=False, min_value=0)
    fua_tol = forms.FloatField(required=False)
    fua_max_iter = forms.IntegerField(required=False, min_value=1)
    dual_max_iter = forms.IntegerField(required=False, min_value=1)
    grid_db_min = forms.FloatField(required=False)
    grid_db_max = forms.FloatField(required=False)
    grid_db_step = forms.FloatField(required=False)
    out_dir = forms.CharField(required=False, max_length=500)
    greedy_rounding = forms.NullBooleanField(required=False)

    def clean_fua_tol(self):
        tol = self.cleaned_data.get('fua_tol')
        if tol is not None and tol <= 0:
            raise ValidationError("Solver tolerance must be greater than 0.")
        return tol

    def clean_grid_db_step(self):
        step = self.cleaned_data.get('grid_db_step')
        if step is not None and step <= 0:
            raise ValidationError("Grid step must be greater than 0.")
        return step

    def clean(self):
        cleaned_data = super().clean()
        low = cleaned_data.get('grid_db_min')
        high = cleaned_data.get('grid_db_max')
        if low is not None and high is not None and high < low:
            raise ValidationError("Bias grid maximum must not be below its minimum.")
        return cleaned_data


def clean_experiment_scalars(data):
    """Validate the scalar part of an experiment config dict."""
    grid = data.get('bias_grid') or {}
    form = ExperimentConfigForm({
        'trials': data.get('trials'),
        'seed_base': data.get('seed_base'),
        'fua_tol': data.get('fua_tol'),
        'fua_max_iter': data.get('fua_max_iter'),
        'dual_max_iter': data.get('dual_max_iter'),
        'grid_db_min': grid.get('db_min'),
        'grid_db_max': grid.get('db_max'),
        'grid_db_step': grid.get('db_step'),
        'out_dir': data.get('out_dir'),
        'greedy_rounding': data.get('greedy_rounding'),
    })
    if not form.is_valid():
        _raise_form_errors(form, 'experiment')
    return form.cleaned_data
