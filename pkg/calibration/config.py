"""Чтение INI-файлов конфигурации эксперимента.

Допустимые секции: ``[synth]``, ``[sweep]``, ``[prior]``, ``[data]``.
Неизвестные секции и ключи считаются ошибкой, чтобы опечатка
не превращалась молча в значение по умолчанию.
"""
import configparser
from pathlib import Path

from .exceptions import CalibrationError, ConfigError
from .forms import DataSourceForm, PriorForm, SweepConfigForm, SynthConfigForm
from .lr_models import JEFFREYS
from .sweep import SweepConfig
from .synthgen import SynthConfig

SECTION_FORMS = {
    'synth': SynthConfigForm,
    'sweep': SweepConfigForm,
    'prior': PriorForm,
    'data': DataSourceForm,
}

UNKNOWN_SECTION = 'неизвестная секция'
UNKNOWN_KEY = 'неизвестный ключ'


def read_config(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding='utf-8') as stream:
            parser.read_file(stream)
    except configparser.Error as error:
        raise ConfigError(f'{path}: {error}') from error
    for section in parser.sections():
        if section not in SECTION_FORMS:
            raise ConfigError(UNKNOWN_SECTION, section=section)
    return parser


def bind_section(parser, name):
    """Проверенная форма секции; без секции форма пуста."""
    form_class = SECTION_FORMS[name]
    data = dict(parser[name]) if parser.has_section(name) else {}
    for key in data:
        if key not in form_class.base_fields:
            raise ConfigError(UNKNOWN_KEY, section=name, key=key)
    form = form_class(data=data)
    if not form.is_valid():
        field_name, messages = next(iter(form.errors.items()))
        raise ConfigError(
            ' '.join(messages),
            section=name,
            key=None if field_name == '__all__' else field_name,
        )
    return form


def synth_config(parser, **overrides):
    form = bind_section(parser, 'synth')
    if not overrides:
        return form.config
    try:
        return SynthConfig(**{**form.present(), **overrides})
    except ConfigError as error:
        raise ConfigError(error.reason, section='synth',
                          key=error.key) from error


def load_synth_config(path, **overrides):
    return synth_config(read_config(path), **overrides)


def load_sweep_config(path, defaults=None, **overrides):
    """Полная конфигурация эксперимента из файла.

    Приоритет значений: ``overrides``, затем секция ``[sweep]``, затем
    ``defaults`` и, наконец, значения по умолчанию ``SweepConfig``.
    """
    parser = read_config(path)
    synth = synth_config(parser)
    sweep_form = bind_section(parser, 'sweep')
    prior = (bind_section(parser, 'prior').prior
             if parser.has_section('prior') else JEFFREYS)
    metadata_path, scores_path = bind_section(parser, 'data').paths(
        Path(path).parent
    )
    options = {**(defaults or {}), **sweep_form.present(), **overrides}
    try:
        return SweepConfig(
            synth=synth,
            prior=prior,
            metadata_path=metadata_path,
            scores_path=scores_path,
            **options,
        )
    except ConfigError as error:
        raise ConfigError(
            error.reason, section=error.section or 'sweep', key=error.key
        ) from error
    except CalibrationError as error:
        raise ConfigError(error.message, section='sweep') from error
