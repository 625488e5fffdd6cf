"""Формы проверки секций файла конфигурации эксперимента.

Каждая секция INI-файла привязывается к своей форме как ``data``.
Ключи, которых нет в файле, получают значения по умолчанию из
соответствующих dataclass-конфигураций.
"""
from pathlib import Path

from django import forms
from django.core.exceptions import ValidationError

from .anchoring import AnchoringScheme
from .exceptions import CalibrationError, ConfigError
from .lr_models import JEFFREYS, Method, NormalGammaHyper
from .synthgen import NOISE_KINDS, SynthConfig

MAX_SEED = 2 ** 64 - 1

BAD_CONDITIONS = 'ожидается список "условие:вероятность" через запятую'
BAD_CHOICE = 'недопустимое значение {value!r}, ожидается одно из: {choices}'
BAD_INTEGERS = 'ожидается список целых чисел через запятую'
NEED_BOTH_FILES = 'metadata и scores задаются вместе'
PRIOR_INCOMPLETE = 'для normal_gamma нужны mu0, kappa0, alpha0 и beta0'


def _split(value):
    return [item.strip() for item in value.split(',') if item.strip()]


class ConfigSectionForm(forms.Form):
    """Общее поведение: все поля необязательны, пустое значение: None."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for form_field in self.fields.values():
            form_field.required = False

    def present(self):
        """Только заданные в секции значения."""
        return {
            name: value for name, value in self.cleaned_data.items()
            if value not in (None, '') and name in self.data
        }

    def build(self, factory, **extra):
        """Создаёт конфигурацию; её ошибки становятся ошибками полей."""
        try:
            return factory(**self.present(), **extra)
        except ConfigError as error:
            field_name = error.key if error.key in self.fields else None
            self.add_error(field_name, error.reason)
        except CalibrationError as error:
            self.add_error(None, error.message)
        return None


class SynthConfigForm(ConfigSectionForm):
    """Секция ``[synth]``: параметры генератора популяции."""
    n_speakers = forms.IntegerField(min_value=2)
    utts_per_speaker = forms.IntegerField(min_value=2)
    conditions = forms.CharField()
    mu_tar = forms.FloatField()
    sigma_tar = forms.FloatField()
    mu_non = forms.FloatField()
    sigma_non = forms.FloatField()
    speaker_shift_sigma = forms.FloatField(min_value=0)
    session_shift_sigma = forms.FloatField(min_value=0)
    mismatch_shift = forms.FloatField()
    noise = forms.ChoiceField(choices=[(kind, kind) for kind in NOISE_KINDS])
    noise_df = forms.FloatField()
    seed = forms.IntegerField(min_value=0, max_value=MAX_SEED)

    def clean_conditions(self):
        value = self.cleaned_data.get('conditions')
        if not value:
            return None
        conditions = []
        for item in _split(value):
            tag, sep, probability = item.partition(':')
            try:
                conditions.append((tag.strip(), float(probability)))
            except ValueError:
                raise ValidationError(BAD_CONDITIONS) from None
            if not sep or not tag.strip():
                raise ValidationError(BAD_CONDITIONS)
        return tuple(conditions)

    def clean(self):
        cleaned_data = super().clean()
        if not self.errors:
            self.config = self.build(SynthConfig)
        return cleaned_data


class SweepConfigForm(ConfigSectionForm):
    """Секция ``[sweep]``: сетка эксперимента."""
    schemes = forms.CharField()
    methods = forms.CharField()
    np_grid = forms.CharField()
    n_replicates = forms.IntegerField(min_value=1)
    base_seed = forms.IntegerField(min_value=0, max_value=MAX_SEED)
    min_suspect_utts = forms.IntegerField(min_value=0)
    nd_cap = forms.IntegerField(min_value=2)
    n_cases = forms.IntegerField(min_value=1)
    same_origin_fraction = forms.FloatField(min_value=0, max_value=1)
    condition_matching = forms.BooleanField()
    jobs = forms.IntegerField(min_value=1)

    @staticmethod
    def _choices(value, choices_class):
        items = _split(value)
        for item in items:
            if item not in choices_class.values:
                raise ValidationError(BAD_CHOICE.format(
                    value=item, choices=', '.join(choices_class.values)
                ))
        return tuple(choices_class(item) for item in items)

    def clean_schemes(self):
        value = self.cleaned_data.get('schemes')
        return self._choices(value, AnchoringScheme) if value else None

    def clean_methods(self):
        value = self.cleaned_data.get('methods')
        return self._choices(value, Method) if value else None

    def clean_np_grid(self):
        value = self.cleaned_data.get('np_grid')
        if not value:
            return None
        try:
            return tuple(int(item) for item in _split(value))
        except ValueError:
            raise ValidationError(BAD_INTEGERS) from None


class PriorForm(ConfigSectionForm):
    """Секция ``[prior]``; без неё используется неинформативный закон."""
    kind = forms.ChoiceField(
        choices=[('jeffreys', 'jeffreys'), ('normal_gamma', 'normal_gamma')]
    )
    mu0 = forms.FloatField()
    kappa0 = forms.FloatField()
    alpha0 = forms.FloatField()
    beta0 = forms.FloatField()

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        if cleaned_data.get('kind') != 'normal_gamma':
            self.prior = JEFFREYS
            return cleaned_data
        values = [cleaned_data.get(name)
                  for name in ('mu0', 'kappa0', 'alpha0', 'beta0')]
        if None in values:
            raise ValidationError(PRIOR_INCOMPLETE)
        try:
            self.prior = NormalGammaHyper.proper(*values)
        except CalibrationError as error:
            raise ValidationError(error.message) from error
        return cleaned_data


class DataSourceForm(ConfigSectionForm):
    """Секция ``[data]``: готовые файлы вместо синтетики."""
    metadata = forms.CharField()
    scores = forms.CharField()

    def clean(self):
        cleaned_data = super().clean()
        if bool(cleaned_data.get('metadata')) != bool(
                cleaned_data.get('scores')):
            raise ValidationError(NEED_BOTH_FILES)
        return cleaned_data

    def paths(self, base_dir):
        """Пути к файлам относительно каталога файла конфигурации."""
        if not self.cleaned_data.get('metadata'):
            return None, None
        return tuple(
            Path(base_dir, self.cleaned_data[name])
            for name in ('metadata', 'scores')
        )
