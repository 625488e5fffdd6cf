"""Модель данных: записи высказываний, матрица оценок, дела и наборы оценок.

Форматы файлов:

* метаданные: ``<utt_id> <speaker_id> [<condition>]`` в строке;
* оценки: ``<utt_id_1> <utt_id_2> <score>`` в строке;
* дамп пула: строка оценок с дополнительной меткой ``Hp|Hd``.

Строки, начинающиеся с ``#``, и пустые строки пропускаются.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Optional, TextIO

import numpy as np
from django.db import models

from .exceptions import (
    CaseError,
    PairNotFoundError,
    ParameterError,
    ScoreParseError,
    SymmetryError,
    UnknownUtteranceError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-9
SIGNIFICANT_DIGITS = 17

DUPLICATE_ID = 'utt_id {utt_id!r} уже встречался'
MALFORMED_META = 'ожидается "<utt_id> <speaker_id> [<condition>]"'
MALFORMED_SCORE = 'ожидается "<utt_id_1> <utt_id_2> <score>"'
BAD_NUMBER = 'не число: {value!r}'
NOT_FINITE = 'оценка должна быть конечной, получено {value!r}'
UNKNOWN_UTT = 'utt_id {utt_id!r} отсутствует в метаданных'
ASYMMETRIC = ('пара ({q}, {r}) записана с разными значениями: '
              '{first!r} и {second!r}')
PAIR_NOT_FOUND = 'оценки для пары ({q}, {r}) нет в матрице'


class Label(models.TextChoices):
    """Метка гипотезы: обвинения (Hp) или защиты (Hd)."""
    HP = 'Hp', 'Hp'
    HD = 'Hd', 'Hd'


def format_score(value, digits=SIGNIFICANT_DIGITS):
    """Текстовое представление оценки, обратимое при 17 значащих цифрах."""
    return f'{value:.{digits}g}'


def _content_lines(stream):
    """Пронумерованные строки потока без комментариев и пустых строк."""
    for number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        yield number, line.split()


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    speaker_id: str
    condition: Optional[str] = None

    def __post_init__(self):
        if not self.utt_id:
            raise ParameterError('пустой utt_id', module='score_domain')
        if not self.speaker_id:
            raise ParameterError(
                f'пустой speaker_id у {self.utt_id!r}', module='score_domain'
            )


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Симметричная матрица попарных оценок.

    Оценки хранятся в плотном массиве ``values``: пара (q, r) записана
    сразу в ячейки [i, j] и [j, i], отсутствующая пара помечена NaN.
    Поэтому lookup(q, r) = lookup(r, q) по построению.
    """
    utterances: tuple
    values: np.ndarray
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        utterances = tuple(self.utterances)
        values = np.array(self.values, dtype=float)
        size = len(utterances)
        if values.shape != (size, size):
            raise ParameterError(
                f'матрица {values.shape} не соответствует '
                f'{size} высказываниям',
                module='score_domain',
            )
        if not np.array_equal(values, values.T, equal_nan=True):
            raise SymmetryError('матрица оценок несимметрична', pair=None)
        values.flags.writeable = False
        object.__setattr__(self, 'utterances', utterances)
        object.__setattr__(self, 'values', values)
        object.__setattr__(
            self,
            'index',
            {record.utt_id: i for i, record in enumerate(utterances)},
        )

    @classmethod
    def from_pairs(cls, utterances, pairs, tolerance=SYMMETRY_TOLERANCE):
        """Собирает матрицу из троек ``(q, r, score)``."""
        utterances = tuple(utterances)
        index = {record.utt_id: i for i, record in enumerate(utterances)}
        values = np.full((len(index), len(index)), np.nan)
        for q, r, score in pairs:
            _store(values, index, q, r, score, tolerance)
        return cls(utterances, values)

    @cached_property
    def utt_ids(self):
        return tuple(record.utt_id for record in self.utterances)

    def index_of(self, utt_id):
        try:
            return self.index[utt_id]
        except KeyError:
            raise UnknownUtteranceError(
                UNKNOWN_UTT.format(utt_id=utt_id)
            ) from None

    def score(self, q, r):
        value = self.values[self.index_of(q), self.index_of(r)]
        if np.isnan(value):
            raise PairNotFoundError(PAIR_NOT_FOUND.format(q=q, r=r))
        return float(value)

    def pairs(self) -> Iterator[tuple]:
        """Сохранённые неупорядоченные пары ``(q, r, score)``, q перед r."""
        rows, cols = np.triu_indices(len(self.utterances), k=1)
        present = ~np.isnan(self.values[rows, cols])
        ids = self.utt_ids
        for i, j in zip(rows[present], cols[present]):
            yield ids[i], ids[j], float(self.values[i, j])

    @property
    def n_pairs(self):
        upper = self.values[np.triu_indices(len(self.utterances), k=1)]
        return int(np.count_nonzero(~np.isnan(upper)))


def _store(values, index, q, r, score, tolerance, line=None):
    for utt_id in (q, r):
        if utt_id not in index:
            raise UnknownUtteranceError(
                _at_line(UNKNOWN_UTT.format(utt_id=utt_id), line)
            )
    if not math.isfinite(score):
        raise ScoreParseError(NOT_FINITE.format(value=score), line)
    i, j = index[q], index[r]
    first = values[i, j]
    if not np.isnan(first):
        if abs(first - score) > tolerance:
            raise SymmetryError(
                _at_line(
                    ASYMMETRIC.format(
                        q=q, r=r, first=float(first), second=score
                    ),
                    line,
                ),
                pair=(q, r),
            )
        # В пределах допуска остаётся первое значение.
        return
    values[i, j] = values[j, i] = score


def _at_line(message, line):
    return message if line is None else f'строка {line}: {message}'


@dataclass(frozen=True)
class CaseSpec:
    """Дело: спорная запись q, эталонная запись r и подозреваемый."""
    q: str
    r: str
    suspect: str

    def __post_init__(self):
        if self.q == self.r:
            raise CaseError(f'q и r совпадают: {self.q!r}')

    def validate(self, meta):
        """Проверяет дело относительно метаданных."""
        speakers = {record.utt_id: record.speaker_id for record in meta}
        for utt_id in (self.q, self.r):
            if utt_id not in speakers:
                raise UnknownUtteranceError(UNKNOWN_UTT.format(utt_id=utt_id))
        if speakers[self.r] != self.suspect:
            raise CaseError(
                f'эталон {self.r!r} принадлежит {speakers[self.r]!r}, '
                f'а не подозреваемому {self.suspect!r}'
            )
        return self


@dataclass(frozen=True)
class LabeledScore:
    value: float
    label: Label

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ParameterError(
                NOT_FINITE.format(value=self.value), module='score_domain'
            )


def _readonly(values):
    array = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise ParameterError(
            'в наборе оценок есть нечисловые значения', module='score_domain'
        )
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Обучающие оценки S = {Sp, Sd} для одного дела.

    Стороны хранятся массивами значений; метка определяется стороной,
    поэтому смешать метки невозможно. Если набор получен из матрицы,
    ``sp_pairs``/``sd_pairs`` содержат индексы сравниваемых высказываний
    в ``utt_ids``.
    """
    sp_values: np.ndarray
    sd_values: np.ndarray
    sp_pairs: Optional[np.ndarray] = None
    sd_pairs: Optional[np.ndarray] = None
    utt_ids: Optional[tuple] = None
    skipped: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'sp_values', _readonly(self.sp_values))
        object.__setattr__(self, 'sd_values', _readonly(self.sd_values))
        for name, values in (('sp_pairs', self.sp_values),
                             ('sd_pairs', self.sd_values)):
            pairs = getattr(self, name)
            if pairs is None:
                continue
            pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
            if len(pairs) != len(values):
                raise ParameterError(
                    f'{name}: {len(pairs)} пар на {len(values)} оценок',
                    module='score_domain',
                )
            object.__setattr__(self, name, pairs)

    @classmethod
    def from_labeled(cls, scores: Iterable[LabeledScore]):
        scores = list(scores)
        return cls(
            [s.value for s in scores if s.label == Label.HP],
            [s.value for s in scores if s.label == Label.HD],
        )

    @cached_property
    def sp(self):
        return tuple(LabeledScore(float(v), Label.HP) for v in self.sp_values)

    @cached_property
    def sd(self):
        return tuple(LabeledScore(float(v), Label.HD) for v in self.sd_values)

    @property
    def n_p(self):
        return len(self.sp_values)

    @property
    def n_d(self):
        return len(self.sd_values)

    def take_sp(self, positions):
        """Набор, в котором от Sp остались только указанные позиции."""
        return self._take('sp', positions)

    def take_sd(self, positions):
        return self._take('sd', positions)

    def _take(self, side, positions):
        positions = np.asarray(positions, dtype=np.intp)
        pairs = getattr(self, f'{side}_pairs')
        changes = {
            f'{side}_values': getattr(self, f'{side}_values')[positions],
        }
        if pairs is not None:
            changes[f'{side}_pairs'] = pairs[positions]
        return replace(self, **changes)

    def comparisons(self, label):
        """Тройки ``(utt_1, utt_2, score)`` одной стороны набора."""
        side = 'sp' if label == Label.HP else 'sd'
        pairs = getattr(self, f'{side}_pairs')
        if pairs is None or self.utt_ids is None:
            raise ParameterError(
                'набор оценок не связан с матрицей', module='score_domain'
            )
        values = getattr(self, f'{side}_values')
        for (i, j), value in zip(pairs, values):
            yield self.utt_ids[i], self.utt_ids[j], float(value)


def load_metadata(source: TextIO):
    """Читает записи высказываний, сохраняя порядок файла."""
    records = []
    seen = set()
    for number, fields in _content_lines(source):
        if len(fields) not in (2, 3):
            raise ScoreParseError(MALFORMED_META, number)
        utt_id = fields[0]
        if utt_id in seen:
            raise ScoreParseError(DUPLICATE_ID.format(utt_id=utt_id), number)
        seen.add(utt_id)
        condition = fields[2] if len(fields) == 3 else None
        records.append(UtteranceRecord(utt_id, fields[1], condition))
    logger.info('Загружено %d высказываний', len(records))
    return records


def load_scores(source: TextIO, meta, tolerance=SYMMETRY_TOLERANCE):
    """Читает файл оценок в симметричную матрицу."""
    meta = tuple(meta)
    index = {record.utt_id: i for i, record in enumerate(meta)}
    values = np.full((len(meta), len(meta)), np.nan)
    lines = 0
    for number, fields in _content_lines(source):
        if len(fields) != 3:
            raise ScoreParseError(MALFORMED_SCORE, number)
        try:
            score = float(fields[2])
        except ValueError:
            raise ScoreParseError(
                BAD_NUMBER.format(value=fields[2]), number
            ) from None
        _store(values, index, fields[0], fields[1], score, tolerance, number)
        lines += 1
    matrix = ScoreMatrix(meta, values)
    logger.info(
        'Загружено %d строк оценок, %d уникальных пар', lines, matrix.n_pairs
    )
    return matrix


def get_score(m: ScoreMatrix, q, r):
    return m.score(q, r)


def save_metadata(meta, stream: TextIO):
    for record in meta:
        fields = [record.utt_id, record.speaker_id]
        if record.condition is not None:
            fields.append(record.condition)
        stream.write(' '.join(fields) + '\n')


def save_scores(m: ScoreMatrix, stream: TextIO, digits=SIGNIFICANT_DIGITS):
    for q, r, score in m.pairs():
        stream.write(f'{q} {r} {format_score(score, digits)}\n')


def write_pool(s: ScoreSet, stream: TextIO, digits=SIGNIFICANT_DIGITS):
    """Дамп пула в формате файла оценок с колонкой метки."""
    for label in (Label.HP, Label.HD):
        for q, r, score in s.comparisons(label):
            stream.write(f'{q} {r} {format_score(score, digits)} {label}\n')
