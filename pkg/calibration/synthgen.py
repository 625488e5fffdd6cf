"""Синтетические популяции дикторов и симметричные матрицы оценок.

Модель оценки пары высказываний (u, v):

    score = mu + offset + e_u + e_v - mismatch + sigma * noise

где mu и sigma зависят от того, один ли это диктор; offset: сдвиг
диктора (только для своих пар); e_u, e_v: сдвиги сессий записи;
mismatch равен ``mismatch_shift`` при разных условиях записи.
Шум гауссов или, для проверки устойчивости, t Стьюдента.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .anchoring import eligible_suspects, make_rng
from .domain import CaseSpec, Label, ScoreMatrix, UtteranceRecord
from .exceptions import ConfigError, InsufficientDataError

logger = logging.getLogger(__name__)

NOISE_KINDS = ('gaussian', 'student_t')


@dataclass(frozen=True)
class SynthConfig:
    """Конфигурация генератора.

    Значения по умолчанию: эталонный эксперимент. Для проверки моментов
    распределений своих и чужих оценок нужно обнулить
    ``speaker_shift_sigma``, ``session_shift_sigma`` и ``mismatch_shift``.
    """
    n_speakers: int = 50
    utts_per_speaker: int = 12
    conditions: tuple = (('cond_a', 0.5), ('cond_b', 0.5))
    mu_tar: float = 4.0
    sigma_tar: float = 1.0
    mu_non: float = -4.0
    sigma_non: float = 1.0
    speaker_shift_sigma: float = 1.0
    session_shift_sigma: float = 1.0
    mismatch_shift: float = 2.0
    noise: str = 'gaussian'
    noise_df: float = 5.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self,
            'conditions',
            tuple((str(tag), float(p)) for tag, p in self.conditions),
        )
        for key in ('n_speakers', 'utts_per_speaker'):
            if getattr(self, key) < 2:
                raise ConfigError('нужно не меньше 2', key=key)
        for key in ('sigma_tar', 'sigma_non', 'noise_df'):
            if not getattr(self, key) > 0:
                raise ConfigError('должно быть положительным', key=key)
        for key in ('speaker_shift_sigma', 'session_shift_sigma'):
            if getattr(self, key) < 0:
                raise ConfigError('не может быть отрицательным', key=key)
        if not self.mu_tar > self.mu_non:
            raise ConfigError('mu_tar должно быть больше mu_non',
                              key='mu_tar')
        if self.noise not in NOISE_KINDS:
            raise ConfigError(
                f'ожидается одно из {", ".join(NOISE_KINDS)}', key='noise'
            )
        probabilities = [p for _, p in self.conditions]
        if (not self.conditions or min(probabilities) < 0
                or not math.isclose(sum(probabilities), 1.0, abs_tol=1e-9)):
            raise ConfigError(
                'вероятности условий должны быть неотрицательны '
                'и давать в сумме 1',
                key='conditions',
            )
        if len({tag for tag, _ in self.conditions}) != len(self.conditions):
            raise ConfigError('повторяющиеся условия', key='conditions')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('ожидается 64-битное целое без знака',
                              key='seed')


def _noise(rng, c: SynthConfig, size):
    if c.noise == 'student_t':
        return rng.standard_t(c.noise_df, size=size)
    return rng.standard_normal(size=size)


def generate(c: SynthConfig):
    """Метаданные и матрица, каждая неупорядоченная пара разыграна один раз."""
    rng = make_rng(c.seed)
    n_utts = c.n_speakers * c.utts_per_speaker
    width = max(3, len(str(c.n_speakers - 1)))
    speakers = np.repeat(np.arange(c.n_speakers), c.utts_per_speaker)
    tags = [tag for tag, _ in c.conditions]
    conditions = rng.choice(
        len(tags), size=n_utts, p=[p for _, p in c.conditions]
    )
    speaker_offsets = rng.normal(0.0, c.speaker_shift_sigma, c.n_speakers)
    session_offsets = rng.normal(0.0, c.session_shift_sigma, n_utts)

    rows, cols = np.triu_indices(n_utts, k=1)
    same = speakers[rows] == speakers[cols]
    mean = np.where(same, c.mu_tar + speaker_offsets[speakers[rows]],
                    c.mu_non)
    mean = mean + session_offsets[rows] + session_offsets[cols]
    mean = mean - c.mismatch_shift * (conditions[rows] != conditions[cols])
    spread = np.where(same, c.sigma_tar, c.sigma_non)
    scores = mean + spread * _noise(rng, c, rows.size)

    values = np.full((n_utts, n_utts), np.nan)
    values[rows, cols] = scores
    values[cols, rows] = scores
    meta = [
        UtteranceRecord(
            utt_id=f'spk{speaker:0{width}d}_u{k % c.utts_per_speaker:02d}',
            speaker_id=f'spk{speaker:0{width}d}',
            condition=tags[conditions[k]],
        )
        for k, speaker in enumerate(speakers)
    ]
    logger.info(
        'Сгенерировано %d дикторов, %d высказываний, %d оценок',
        c.n_speakers, n_utts, scores.size,
    )
    return meta, ScoreMatrix(meta, values)


@dataclass(frozen=True)
class LabeledCase:
    """Дело с известной истиной: Hp, если q от подозреваемого."""
    case_id: str
    case: CaseSpec
    label: Label


def make_cases(meta, n_cases, same_origin_fraction, seed, min_utts=10):
    """Разыгрывает дела среди подходящих подозреваемых."""
    if not 0 <= same_origin_fraction <= 1:
        raise ConfigError('ожидается число из [0, 1]',
                          key='same_origin_fraction')
    suspects = eligible_suspects(meta, min_utts)
    if not suspects:
        raise InsufficientDataError(
            f'нет дикторов с числом высказываний больше {min_utts}',
            module='synthgen',
        )
    by_speaker = defaultdict(list)
    for record in meta:
        by_speaker[record.speaker_id].append(record.utt_id)
    speakers = sorted(by_speaker)
    for utts in by_speaker.values():
        utts.sort()

    rng = make_rng(seed)
    cases = []
    for number in range(n_cases):
        suspect = suspects[rng.integers(len(suspects))]
        utts = by_speaker[suspect]
        r = utts[rng.integers(len(utts))]
        if rng.random() < same_origin_fraction:
            candidates = [utt for utt in utts if utt != r]
            label = Label.HP
        else:
            others = [speaker for speaker in speakers if speaker != suspect]
            if not others:
                raise InsufficientDataError(
                    'в данных только один диктор', module='synthgen'
                )
            candidates = by_speaker[others[rng.integers(len(others))]]
            label = Label.HD
        if not candidates:
            raise InsufficientDataError(
                f'у {suspect} нет второго высказывания', module='synthgen'
            )
        q = candidates[rng.integers(len(candidates))]
        cases.append(LabeledCase(
            case_id=f'case{number:05d}',
            case=CaseSpec(q=q, r=r, suspect=suspect),
            label=label,
        ))
    return cases
