"""Эксперимент с разреженностью Sp: Cllr как функция Np.

Ячейка эксперимента: (схема, метод, Np, повтор). Для каждого повтора
генерируется (или читается) популяция и разыгрываются дела; в ячейке
для каждого дела строится пул по схеме, из Sp выбирается Np оценок,
подгоняется модель и считается LLR оценки самого дела. Cllr ячейки
считается по всем LLR повтора сразу.

Все зерна являются чистыми функциями базового зерна и ключа ячейки, поэтому
любую ячейку можно пересчитать отдельно, а результат не зависит от
порядка выполнения.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .anchoring import (
    RNG_ALGORITHM,
    AnchoringScheme,
    build_pool,
    make_rng,
    PoolSpec,
    subsample_sd,
    subsample_sp,
)
from .domain import format_score, load_metadata, load_scores
from .evaluation import LlrTrial, cllr
from .exceptions import CalibrationError, ConfigError, InsufficientDataError
from .lr_models import (
    JEFFREYS,
    VARIANCE_FLOOR,
    Method,
    NormalGammaHyper,
    fit_transform,
    llr,
)
from .synthgen import SynthConfig, generate, make_cases

logger = logging.getLogger(__name__)

ROW_HEADER = ('scheme', 'method', 'np', 'replicate', 'seed',
              'n_cases_p', 'n_cases_d', 'cllr')
SUMMARY_HEADER = ('scheme', 'method', 'np', 'n_replicates', 'n_errors',
                  'mean_cllr')
ERROR_MARKER = 'ERROR'


@dataclass(frozen=True)
class SweepConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    metadata_path: Optional[Path] = None
    scores_path: Optional[Path] = None
    schemes: tuple = (AnchoringScheme.SA, AnchoringScheme.RA)
    methods: tuple = (Method.ML, Method.BAYES)
    np_grid: tuple = (2, 3, 5, 10, 20, 50, 100)
    n_replicates: int = 20
    base_seed: int = 0
    min_suspect_utts: int = 10
    nd_cap: Optional[int] = None
    n_cases: int = 200
    same_origin_fraction: float = 0.5
    condition_matching: bool = False
    prior: NormalGammaHyper = JEFFREYS
    variance_floor: float = VARIANCE_FLOOR
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'schemes', tuple(
            AnchoringScheme(scheme) for scheme in self.schemes
        ))
        object.__setattr__(self, 'methods', tuple(
            Method(method) for method in self.methods
        ))
        object.__setattr__(self, 'np_grid', tuple(
            int(n_p) for n_p in self.np_grid
        ))
        grid = self.np_grid
        if not grid or grid[0] < 2:
            raise ConfigError('минимальное Np должно быть не меньше 2',
                              key='np_grid')
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise ConfigError('значения должны строго возрастать',
                              key='np_grid')
        if not self.schemes or not self.methods:
            raise ConfigError('нужна хотя бы одна схема и один метод',
                              key='schemes' if not self.schemes
                              else 'methods')
        if self.n_replicates < 1:
            raise ConfigError('нужен хотя бы один повтор', key='n_replicates')
        if self.jobs < 1:
            raise ConfigError('нужен хотя бы один поток', key='jobs')
        if self.nd_cap is not None and self.nd_cap < 2:
            raise ConfigError('должно быть не меньше 2', key='nd_cap')
        if (self.metadata_path is None) != (self.scores_path is None):
            raise ConfigError('metadata и scores задаются вместе',
                              section='data')


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    method: str
    np: int
    replicate: int
    seed: int
    n_cases_p: int
    n_cases_d: int
    cllr: Optional[float]
    error: Optional[str] = None

    @property
    def key(self):
        return (self.scheme, self.method, self.np, self.replicate)


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    method: str
    np: int
    n_replicates: int
    n_errors: int
    mean_cllr: Optional[float]


def _key_code(key):
    if isinstance(key, str):
        return int.from_bytes(key.encode(), 'little')
    return int(key)


def derive_seed(base_seed, *keys):
    """64-битное зерно как чистая функция базового зерна и ключей."""
    sequence = np.random.SeedSequence(
        [int(base_seed)] + [_key_code(key) for key in keys]
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def cell_seed(base_seed, scheme, method, n_p, replicate):
    return derive_seed(base_seed, str(scheme), str(method), n_p, replicate)


@dataclass(frozen=True)
class ReplicateData:
    """Популяция, дела и пулы одного повтора."""
    replicate: int
    cases: tuple
    case_scores: dict
    pools: dict


def load_source(config: SweepConfig):
    """Метаданные и матрица из файлов или None для синтетики."""
    if config.metadata_path is None:
        return None
    with open(config.metadata_path, encoding='utf-8') as stream:
        meta = load_metadata(stream)
    with open(config.scores_path, encoding='utf-8') as stream:
        matrix = load_scores(stream, meta)
    return meta, matrix


def prepare_replicate(config: SweepConfig, replicate, source=None):
    if source is None:
        synth = replace(
            config.synth,
            seed=derive_seed(config.base_seed, 'population', replicate),
        )
        meta, matrix = generate(synth)
    else:
        meta, matrix = source
    cases = make_cases(
        meta,
        config.n_cases,
        config.same_origin_fraction,
        derive_seed(config.base_seed, 'cases', replicate),
        config.min_suspect_utts,
    )
    conditions = {record.utt_id: record.condition for record in meta}
    case_scores = {}
    pools = {scheme: {} for scheme in config.schemes}
    for labeled in cases:
        case = labeled.case
        score = matrix.values[matrix.index_of(case.q),
                              matrix.index_of(case.r)]
        if np.isnan(score):
            logger.warning('Нет оценки для дела %s (q=%s, r=%s)',
                           labeled.case_id, case.q, case.r)
            continue
        case_scores[labeled.case_id] = float(score)
        condition = (conditions[case.q] if config.condition_matching
                     else None)
        for scheme in config.schemes:
            spec = PoolSpec(scheme, case, condition)
            try:
                pools[scheme][labeled.case_id] = build_pool(
                    matrix, meta, spec
                )
            except InsufficientDataError as error:
                logger.info('Дело %s, схема %s: %s',
                            labeled.case_id, scheme, error)
    return ReplicateData(replicate, tuple(cases), case_scores, pools)


def _cell_trials(config, data, scheme, method, n_p, seed):
    rng = make_rng(seed)
    trials = []
    too_small = 0
    for labeled in data.cases:
        pool = data.pools[scheme].get(labeled.case_id)
        if pool is None or pool.n_p < n_p:
            too_small += 1
            continue
        s = subsample_sp(pool, n_p, rng)
        if config.nd_cap is not None and s.n_d > config.nd_cap:
            s = subsample_sd(s, config.nd_cap, rng)
        transform = fit_transform(
            s, method, config.prior, config.variance_floor,
            seed=seed, scheme=scheme,
        )
        trials.append(LlrTrial(
            llr(transform, data.case_scores[labeled.case_id]),
            labeled.label,
            labeled.case_id,
        ))
    if too_small:
        logger.info('Ячейка %s/%s/Np=%d: пропущено %d дел без пула',
                    scheme, method, n_p, too_small)
    return trials


def run_cell_on(config, data: ReplicateData, scheme, method, n_p):
    seed = cell_seed(config.base_seed, scheme, method, n_p, data.replicate)
    row = {
        'scheme': str(scheme),
        'method': str(method),
        'np': n_p,
        'replicate': data.replicate,
        'seed': seed,
    }
    trials = []
    try:
        trials = _cell_trials(config, data, scheme, method, n_p, seed)
        report = cllr(trials)
    except CalibrationError as error:
        logger.error('Ячейка %s/%s/Np=%d/повтор %d: %s',
                     scheme, method, n_p, data.replicate, error)
        labels = [str(trial.label) for trial in trials]
        return SweepRow(
            **row,
            n_cases_p=labels.count('Hp'),
            n_cases_d=labels.count('Hd'),
            cllr=None,
            error=str(error),
        )
    return SweepRow(**row, n_cases_p=report.n_p, n_cases_d=report.n_d,
                    cllr=report.cllr)


def run_cell(config: SweepConfig, scheme, method, n_p, replicate,
             source=None):
    """Отдельный пересчёт одной ячейки."""
    data = prepare_replicate(config, replicate, source)
    return run_cell_on(config, data, scheme, method, n_p)


def run_replicate(config: SweepConfig, replicate, source=None):
    data = prepare_replicate(config, replicate, source)
    rows = [
        run_cell_on(config, data, scheme, method, n_p)
        for scheme in config.schemes
        for method in config.methods
        for n_p in config.np_grid
    ]
    logger.info('Повтор %d из %d готов', replicate + 1, config.n_replicates)
    return rows


def run_sweep(config: SweepConfig):
    """Все ячейки эксперимента в порядке (схема, метод, Np, повтор)."""
    source = load_source(config)
    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        per_replicate = list(executor.map(
            lambda replicate: run_replicate(config, replicate, source),
            range(config.n_replicates),
        ))
    order = {
        'scheme': {str(s): i for i, s in enumerate(config.schemes)},
        'method': {str(m): i for i, m in enumerate(config.methods)},
    }
    rows = [row for rows in per_replicate for row in rows]
    rows.sort(key=lambda row: (order['scheme'][row.scheme],
                               order['method'][row.method],
                               row.np, row.replicate))
    return rows


def summarize(rows):
    """Средний Cllr по повторам для каждой ячейки (схема, метод, Np)."""
    groups = {}
    for row in rows:
        groups.setdefault((row.scheme, row.method, row.np), []).append(row)
    summary = []
    for (scheme, method, n_p), members in groups.items():
        values = [row.cllr for row in members if row.error is None]
        summary.append(SummaryRow(
            scheme=scheme,
            method=method,
            np=n_p,
            n_replicates=len(members),
            n_errors=len(members) - len(values),
            mean_cllr=math.fsum(values) / len(values) if values else None,
        ))
    return summary


def _cell(value, digits):
    if value is None:
        return ERROR_MARKER
    return format_score(value, digits)


def write_rows(rows, stream, digits=17):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(ROW_HEADER)
    for row in rows:
        writer.writerow([
            row.scheme, row.method, row.np, row.replicate, row.seed,
            row.n_cases_p, row.n_cases_d, _cell(row.cllr, digits),
        ])


def read_rows(stream):
    """Строки CSV эксперимента обратно в SweepRow."""
    rows = []
    for record in csv.DictReader(stream):
        failed = record['cllr'] == ERROR_MARKER
        rows.append(SweepRow(
            scheme=record['scheme'],
            method=record['method'],
            np=int(record['np']),
            replicate=int(record['replicate']),
            seed=int(record['seed']),
            n_cases_p=int(record['n_cases_p']),
            n_cases_d=int(record['n_cases_d']),
            cllr=None if failed else float(record['cllr']),
            error=ERROR_MARKER if failed else None,
        ))
    return rows


def write_summary(summary, stream, digits=17):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(SUMMARY_HEADER)
    for row in summary:
        writer.writerow([
            row.scheme, row.method, row.np, row.n_replicates, row.n_errors,
            _cell(row.mean_cllr, digits),
        ])


def write_manifest(config: SweepConfig, stream):
    """Параметры запуска в формате ``key = value``."""
    entries = [('rng', RNG_ALGORITHM), ('base_seed', config.base_seed)]
    entries += [
        (name, getattr(config, name))
        for name in ('n_replicates', 'n_cases', 'same_origin_fraction',
                     'min_suspect_utts', 'nd_cap', 'condition_matching',
                     'variance_floor')
    ]
    entries += [
        ('schemes', ', '.join(map(str, config.schemes))),
        ('methods', ', '.join(map(str, config.methods))),
        ('np_grid', ', '.join(map(str, config.np_grid))),
        ('prior', 'jeffreys' if config.prior.improper_jeffreys else
         f'normal_gamma({config.prior.mu0}, {config.prior.kappa0}, '
         f'{config.prior.alpha0}, {config.prior.beta0})'),
    ]
    if config.metadata_path is None:
        entries += [(f'synth.{name}', value)
                    for name, value in vars(config.synth).items()
                    if name != 'seed']
    else:
        entries += [('data.metadata', config.metadata_path),
                    ('data.scores', config.scores_path)]
    for key, value in entries:
        stream.write(f'{key} = {value}\n')
