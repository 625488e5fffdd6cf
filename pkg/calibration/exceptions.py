"""Иерархия ошибок приложения калибровки.

Каждая ошибка знает, к какому модулю она относится, и печатается
в виде ``[модуль] сообщение``: так команды показывают пользователю,
на каком этапе сломался расчёт.
"""


class CalibrationError(Exception):
    """Базовая ошибка приложения."""
    module = 'calibration'

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return f'[{self.module}] {self.message}'


class ScoreDomainError(CalibrationError):
    module = 'score_domain'


class ScoreParseError(ScoreDomainError):
    """Некорректная строка в файле метаданных или оценок."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f'строка {line}: {message}'
        super().__init__(message)
        self.line = line


class UnknownUtteranceError(ScoreDomainError):
    """Ссылка на utt_id, которого нет в метаданных."""


class SymmetryError(ScoreDomainError):
    """Пара записана в обоих порядках с разными значениями."""

    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class PairNotFoundError(ScoreDomainError, KeyError):
    """Запрошенной пары нет в матрице."""

    def __str__(self):
        return CalibrationError.__str__(self)


class CaseError(ScoreDomainError):
    """Нарушены инварианты описания дела."""


class InsufficientDataError(CalibrationError):
    """Недостаточно обучающих оценок на одной из сторон."""
    module = 'anchoring'

    def __init__(self, message, side=None, module=None):
        if side is not None:
            message = f'{side}: {message}'
        super().__init__(message)
        self.side = side
        if module is not None:
            self.module = module


class ParameterError(CalibrationError, ValueError):
    """Недопустимое значение числового параметра."""

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class ImproperPosteriorError(CalibrationError):
    """Апостериорное или прогнозное распределение не нормируемо."""
    module = 'calibration_models'


class TransformFormatError(CalibrationError):
    """Файл преобразования не читается."""
    module = 'calibration_models'


class EvaluationError(CalibrationError):
    module = 'evaluation'


class ConfigError(CalibrationError):
    """Ошибка в файле конфигурации эксперимента."""
    module = 'config'

    def __init__(self, message, section=None, key=None):
        reason = message
        if key is not None:
            prefix = f'{section}.{key}' if section else key
            message = f'{prefix}: {message}'
        elif section is not None:
            message = f'[{section}]: {message}'
        super().__init__(message)
        self.section = section
        self.key = key
        self.reason = reason
