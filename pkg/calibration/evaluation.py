"""Оценка качества LLR метрикой Cllr.

Cllr считается в битах, обе суммы (по Hp и по Hd) берутся с равными
весами независимо от числа испытаний каждого класса. LLR на входе
натуральные.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from .domain import Label, format_score
from .exceptions import EvaluationError

LN2 = math.log(2)

MISSING_CLASS = 'нет ни одного испытания с меткой {label}'
NOT_FINITE = 'LLR должен быть конечным, получено {value!r}'
MALFORMED_TRIAL = 'строка {line}: ожидается "<case_id> <Hp|Hd> <llr>"'
REPORT_HEADER = ('n_p', 'n_d', 'cllr', 'informative')


@dataclass(frozen=True)
class LlrTrial:
    llr: float
    label: Label
    case_id: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.llr):
            raise EvaluationError(NOT_FINITE.format(value=self.llr))
        if self.label not in Label.values:
            raise EvaluationError(f'неизвестная метка {self.label!r}')


@dataclass(frozen=True)
class CllrReport:
    cllr: float
    n_p: int
    n_d: int
    informative: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'informative', self.cllr < 1)


def _mean_softplus2(x):
    """Среднее log2(1 + e^x) без переполнения при больших |x|."""
    return math.fsum(np.logaddexp2(0.0, x / LN2)) / len(x)


def cllr(trials):
    """Cllr по набору испытаний с известными метками."""
    trials = list(trials)
    llrs = np.array([trial.llr for trial in trials], dtype=float)
    labels = np.array([str(trial.label) for trial in trials])
    target = llrs[labels == Label.HP]
    non_target = llrs[labels == Label.HD]
    for label, values in ((Label.HP, target), (Label.HD, non_target)):
        if values.size == 0:
            raise EvaluationError(MISSING_CLASS.format(label=label))
    value = 0.5 * (_mean_softplus2(-target) + _mean_softplus2(non_target))
    return CllrReport(cllr=value, n_p=target.size, n_d=non_target.size)


def read_trials(stream: TextIO):
    trials = []
    for number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.split()
        if len(fields) != 3 or fields[1] not in Label.values:
            raise EvaluationError(MALFORMED_TRIAL.format(line=number))
        try:
            value = float(fields[2])
        except ValueError:
            raise EvaluationError(
                MALFORMED_TRIAL.format(line=number)
            ) from None
        trials.append(LlrTrial(value, Label(fields[1]), fields[0]))
    return trials


def write_trials(trials, stream: TextIO, digits=17):
    for number, trial in enumerate(trials):
        case_id = trial.case_id or f'case{number}'
        stream.write(f'{case_id} {trial.label} '
                     f'{format_score(trial.llr, digits)}\n')


def format_report(report: CllrReport, digits=17):
    """Строка CSV ``n_p,n_d,cllr,informative``."""
    return ','.join([
        str(report.n_p),
        str(report.n_d),
        format_score(report.cllr, digits),
        'true' if report.informative else 'false',
    ])
