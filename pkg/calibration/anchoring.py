"""Построение обучающих пулов Sp и Sd для дела.

Две схемы привязки:

* SA (к подозреваемому): Sp из всех пар высказываний подозреваемого,
  Sd из сравнений высказываний подозреваемого с остальной популяцией;
* RA (к эталону): обе стороны сравниваются с самой эталонной записью r.

Высказывания дела исключаются: q и r не попадают на сторону
подозреваемого, q не попадает на сторону популяции.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np
from django.db import models

from .domain import CaseSpec, ScoreMatrix, ScoreSet
from .exceptions import InsufficientDataError, ParameterError

logger = logging.getLogger(__name__)

MIN_NP = 2
RNG_ALGORITHM = 'numpy.random.PCG64'

EMPTY_POOL = 'пул пуст для дела q={q}, r={r} (схема {scheme})'
NP_TOO_LARGE = 'запрошено Np={np}, в пуле только {size}'
ND_TOO_LARGE = 'запрошено Nd={nd}, в пуле только {size}'
NP_TOO_SMALL = 'Np должно быть не меньше {minimum}, получено {np}'


class AnchoringScheme(models.TextChoices):
    SA = 'SA', 'Привязка к подозреваемому'
    RA = 'RA', 'Привязка к эталону'


@dataclass(frozen=True)
class PoolSpec:
    scheme: AnchoringScheme
    case: CaseSpec
    condition_filter: Optional[str] = None


def eligible_suspects(meta, min_utts):
    """Дикторы, у которых строго больше ``min_utts`` высказываний."""
    counts = Counter(record.speaker_id for record in meta)
    return sorted(
        speaker for speaker, count in counts.items() if count > min_utts
    )


def _sides(m: ScoreMatrix, meta, case, condition_filter):
    """Индексы стороны подозреваемого и стороны популяции.

    Возвращает индексы высказываний подозреваемого без q и r, флаги их
    соответствия фильтру условий и индексы чужих высказываний без q,
    уже отфильтрованные по условию.
    """
    case.validate(meta)
    excluded = {case.q, case.r}
    suspect, matches, others = [], [], []
    for record in meta:
        matched = (condition_filter is None
                   or record.condition == condition_filter)
        if record.speaker_id == case.suspect:
            if record.utt_id not in excluded:
                suspect.append(m.index_of(record.utt_id))
                matches.append(matched)
        elif record.utt_id != case.q and matched:
            others.append(m.index_of(record.utt_id))
    return (
        np.array(suspect, dtype=np.intp),
        np.array(matches, dtype=bool),
        np.array(others, dtype=np.intp),
    )


def _pairs_block(m, rows, cols):
    """Все пары rows x cols вместе со значениями из матрицы."""
    grid_rows, grid_cols = np.meshgrid(rows, cols, indexing='ij')
    pairs = np.column_stack([grid_rows.ravel(), grid_cols.ravel()])
    return pairs, m.values[pairs[:, 0], pairs[:, 1]]


def _finish(m, sp_pairs, sp_values, sd_pairs, sd_values, case, scheme):
    sp_present = ~np.isnan(sp_values)
    sd_present = ~np.isnan(sd_values)
    skipped = int(np.count_nonzero(~sp_present)
                  + np.count_nonzero(~sd_present))
    if skipped:
        logger.warning(
            'Схема %s, дело q=%s r=%s: пропущено %d отсутствующих пар',
            scheme, case.q, case.r, skipped,
        )
    message = EMPTY_POOL.format(q=case.q, r=case.r, scheme=scheme)
    if not sp_present.any():
        raise InsufficientDataError(message, side='Hp')
    if not sd_present.any():
        raise InsufficientDataError(message, side='Hd')
    return ScoreSet(
        sp_values[sp_present],
        sd_values[sd_present],
        sp_pairs=sp_pairs[sp_present],
        sd_pairs=sd_pairs[sd_present],
        utt_ids=m.utt_ids,
        skipped=skipped,
    )


def build_pool_sa(m: ScoreMatrix, meta, case: CaseSpec,
                  condition_filter=None):
    """Пулы схемы SA.

    Sp: неупорядоченные пары разных высказываний подозреваемого (каждая
    пара один раз); при фильтре условий хотя бы одно высказывание пары
    должно ему соответствовать. Sd: высказывания подозреваемого против
    чужих высказываний, подходящих под фильтр.
    """
    suspect, matches, others = _sides(m, meta, case, condition_filter)
    upper_rows, upper_cols = np.triu_indices(len(suspect), k=1)
    keep = matches[upper_rows] | matches[upper_cols]
    sp_pairs = np.column_stack(
        [suspect[upper_rows[keep]], suspect[upper_cols[keep]]]
    )
    sp_values = m.values[sp_pairs[:, 0], sp_pairs[:, 1]]
    sd_pairs, sd_values = _pairs_block(m, suspect, others)
    return _finish(
        m, sp_pairs, sp_values, sd_pairs, sd_values, case,
        AnchoringScheme.SA,
    )


def build_pool_ra(m: ScoreMatrix, meta, case: CaseSpec,
                  condition_filter=None):
    """Пулы схемы RA: каждое сравнение включает эталон r."""
    suspect, matches, others = _sides(m, meta, case, condition_filter)
    reference = m.index_of(case.r)
    sp_pairs, sp_values = _pairs_block(m, suspect[matches], [reference])
    sd_pairs, sd_values = _pairs_block(m, others, [reference])
    return _finish(
        m, sp_pairs, sp_values, sd_pairs, sd_values, case,
        AnchoringScheme.RA,
    )


POOL_BUILDERS = {
    AnchoringScheme.SA: build_pool_sa,
    AnchoringScheme.RA: build_pool_ra,
}


def build_pool(m: ScoreMatrix, meta, spec: PoolSpec):
    builder = POOL_BUILDERS[AnchoringScheme(spec.scheme)]
    return builder(m, meta, spec.case, spec.condition_filter)


def make_rng(seed):
    """Генератор PCG64; уже готовый генератор возвращается как есть."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def subsample_sp(s: ScoreSet, n_p, seed):
    """Равномерная выборка Np оценок из Sp без возвращения; Sd не трогается.

    ``seed``: целое без знака или уже созданный ``numpy.random.Generator``.
    """
    if n_p < MIN_NP:
        raise ParameterError(
            NP_TOO_SMALL.format(minimum=MIN_NP, np=n_p), module='anchoring'
        )
    if n_p > s.n_p:
        raise InsufficientDataError(
            NP_TOO_LARGE.format(np=n_p, size=s.n_p), side='Hp'
        )
    positions = make_rng(seed).choice(s.n_p, size=n_p, replace=False)
    return s.take_sp(positions)


def subsample_sd(s: ScoreSet, nd, seed):
    """Ограничение Nd для экономии времени, по умолчанию не применяется."""
    if nd > s.n_d:
        raise InsufficientDataError(
            ND_TOO_LARGE.format(nd=nd, size=s.n_d), side='Hd'
        )
    positions = make_rng(seed).choice(s.n_d, size=nd, replace=False)
    return s.take_sd(positions)
