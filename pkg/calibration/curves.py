"""Табличные кривые для графиков: плотности классов и функция оценка -> LLR."""
import csv
import math

import numpy as np

from .domain import format_score
from .exceptions import ParameterError
from .lr_models import llr

LN10 = math.log(10)


def score_grid(start, stop, step):
    """Равномерная сетка [start, stop] с шагом step, концы включены."""
    if not step > 0:
        raise ParameterError(f'шаг должен быть положительным: {step!r}',
                             module='harness_cli')
    if stop < start:
        raise ParameterError(f'stop={stop!r} меньше start={start!r}',
                             module='harness_cli')
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def curve_table(transforms, grid):
    """Заголовок и строки: s, затем для каждого метода LLR и плотности."""
    methods = [str(t.method) for t in transforms]
    if len(set(methods)) != len(methods):
        raise ParameterError('методы преобразований повторяются',
                             module='harness_cli')
    header = ['s']
    header += [f'llr_{method.lower()}' for method in methods]
    for method in methods:
        header += [f'logpdf_{method.lower()}_hp',
                   f'logpdf_{method.lower()}_hd']
    columns = [grid]
    columns += [np.asarray(llr(t, grid)) for t in transforms]
    for t in transforms:
        columns += [np.asarray(t.numerator.logpdf(grid)),
                    np.asarray(t.denominator.logpdf(grid))]
    return header, np.column_stack(columns)


def write_table(header, rows, stream, digits=9):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_score(value + 0.0, digits) for value in row])
