"""Модели преобразования оценки в логарифм отношения правдоподобия.

Для каждой гипотезы независимо строится одномерная плотность оценок:

* ML: гауссиана с выборочным средним и дисперсией ss / (N - 1);
* BAYES: нормально-гамма апостериорное распределение параметров
  гауссианы и его прогнозная плотность, t-распределение Стьюдента.

LLR: разность логарифмов плотностей числителя (Hp) и знаменателя (Hd),
всё считается в логарифмической шкале.
"""
import math
from dataclasses import dataclass, fields
from typing import Optional, TextIO, Union

import numpy as np
from django.db import models
from scipy.special import gammaln

from .anchoring import RNG_ALGORITHM
from .domain import ScoreSet, format_score, SIGNIFICANT_DIGITS
from .exceptions import (
    ImproperPosteriorError,
    InsufficientDataError,
    ParameterError,
    TransformFormatError,
)

VARIANCE_FLOOR = 1e-8
LOG_2PI = math.log(2 * math.pi)
LARGE_Z = 1e150
MAX_LLR = float(np.finfo(float).max)

EMPTY_SCORES = 'нет ни одной оценки'
NOT_FINITE = 'среди оценок есть бесконечные или NaN значения'
TOO_FEW = 'нужно не меньше 2 оценок, получено {n}'
IMPROPER_POSTERIOR = ('неинформативный априорный закон требует n >= 2 '
                      'и ненулевого разброса (n={n}, ss={ss!r})')
IMPROPER_PREDICTIVE = ('alpha_n={alpha!r} <= 0: прогнозное распределение '
                       'не нормируемо')


class Method(models.TextChoices):
    ML = 'ML', 'Максимальное правдоподобие'
    BAYES = 'BAYES', 'Полностью байесовский вывод'


def _positive(value):
    return math.isfinite(value) and value > 0


@dataclass(frozen=True)
class SufficientStats:
    n: int
    mean: float
    ss: float


def suff_stats(scores):
    """Достаточные статистики по двухпроходной схеме с поправкой среднего."""
    values = np.asarray(scores, dtype=float).reshape(-1)
    if values.size == 0:
        raise InsufficientDataError(EMPTY_SCORES, module='calibration_models')
    if not np.all(np.isfinite(values)):
        raise ParameterError(NOT_FINITE, module='calibration_models')
    n = values.size
    mean = values.sum() / n
    deviations = values - mean
    # Поправка компенсирует ошибку округления первого прохода.
    mean += deviations.sum() / n
    deviations = values - mean
    ss = float(np.sum(deviations * deviations))
    return SufficientStats(n=n, mean=float(mean), ss=ss)


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma2: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and _positive(self.sigma2)):
            raise ParameterError(
                f'недопустимые параметры гауссианы: {self}',
                module='calibration_models',
            )

    def logpdf(self, s):
        return gaussian_logpdf(self, s)


@dataclass(frozen=True)
class StudentTParams:
    nu: float
    loc: float
    scale: float

    def __post_init__(self):
        if not (_positive(self.nu) and math.isfinite(self.loc)
                and _positive(self.scale)):
            raise ParameterError(
                f'недопустимые параметры t-распределения: {self}',
                module='calibration_models',
            )

    def logpdf(self, s):
        return student_t_logpdf(self, s)


@dataclass(frozen=True)
class NormalGammaHyper:
    """Гиперпараметры нормально-гамма априорного распределения.

    При ``improper_jeffreys`` значения (kappa0, alpha0, beta0) понимаются
    как предел (0, -1/2, 0), mu0 не используется.
    """
    mu0: float = 0.0
    kappa0: float = 0.0
    alpha0: float = -0.5
    beta0: float = 0.0
    improper_jeffreys: bool = True

    def __post_init__(self):
        if self.improper_jeffreys:
            object.__setattr__(self, 'kappa0', 0.0)
            object.__setattr__(self, 'alpha0', -0.5)
            object.__setattr__(self, 'beta0', 0.0)
            return
        if not (math.isfinite(self.mu0) and _positive(self.kappa0)
                and _positive(self.alpha0) and _positive(self.beta0)):
            raise ParameterError(
                'собственный априорный закон требует kappa0, alpha0, '
                f'beta0 > 0: {self}',
                module='calibration_models',
            )

    @classmethod
    def jeffreys(cls):
        return cls()

    @classmethod
    def proper(cls, mu0, kappa0, alpha0, beta0):
        return cls(mu0, kappa0, alpha0, beta0, improper_jeffreys=False)


JEFFREYS = NormalGammaHyper.jeffreys()


@dataclass(frozen=True)
class NormalGammaPosterior:
    mu_n: float
    kappa_n: float
    alpha_n: float
    beta_n: float

    def __post_init__(self):
        values = (self.mu_n, self.kappa_n, self.alpha_n, self.beta_n)
        if not all(math.isfinite(value) for value in values):
            raise ImproperPosteriorError(
                f'бесконечные гиперпараметры: {self}'
            )
        if not (self.kappa_n > 0 and self.beta_n > 0):
            raise ImproperPosteriorError(
                f'kappa_n и beta_n должны быть положительны: {self}'
            )

    def as_hyper(self):
        """Апостериорный закон как априорный для следующего обновления."""
        return NormalGammaHyper.proper(
            self.mu_n, self.kappa_n, self.alpha_n, self.beta_n
        )


def update_posterior(h: NormalGammaHyper, st: SufficientStats):
    """Сопряжённое обновление нормально-гамма закона."""
    n, mean, ss = st.n, st.mean, st.ss
    if h.improper_jeffreys:
        if n < 2 or ss <= 0:
            raise ImproperPosteriorError(
                IMPROPER_POSTERIOR.format(n=n, ss=ss)
            )
        return NormalGammaPosterior(
            mu_n=mean, kappa_n=float(n), alpha_n=(n - 1) / 2, beta_n=ss / 2,
        )
    kappa_n = h.kappa0 + n
    shift = mean - h.mu0
    return NormalGammaPosterior(
        mu_n=(h.kappa0 * h.mu0 + n * mean) / kappa_n,
        kappa_n=kappa_n,
        alpha_n=h.alpha0 + n / 2,
        beta_n=(h.beta0 + ss / 2
                + h.kappa0 * n * shift * shift / (2 * kappa_n)),
    )


def predictive(post: NormalGammaPosterior):
    """Прогнозная плотность новой оценки: t Стьюдента."""
    if not post.alpha_n > 0:
        raise ImproperPosteriorError(
            IMPROPER_PREDICTIVE.format(alpha=post.alpha_n)
        )
    scale2 = (post.beta_n * (post.kappa_n + 1)
              / (post.alpha_n * post.kappa_n))
    return StudentTParams(
        nu=2 * post.alpha_n, loc=post.mu_n, scale=math.sqrt(scale2)
    )


def gaussian_logpdf(p: GaussianParams, s):
    z = np.subtract(s, p.mu)
    return -0.5 * (LOG_2PI + math.log(p.sigma2)) - z * z / (2 * p.sigma2)


def student_t_logpdf(t: StudentTParams, s):
    u = np.subtract(s, t.loc) / (t.scale * math.sqrt(t.nu))
    # При |u| >= 1e150 квадрат переполняется, а log1p(u^2) = 2 log|u|.
    with np.errstate(over='ignore', divide='ignore'):
        kernel = np.where(np.abs(u) < LARGE_Z, np.log1p(u * u),
                          2 * np.log(np.abs(u)))
    return (
        gammaln((t.nu + 1) / 2) - gammaln(t.nu / 2)
        - 0.5 * math.log(t.nu * math.pi * t.scale * t.scale)
        - (t.nu + 1) / 2 * kernel
    )


def fit_ml(scores, variance_floor=VARIANCE_FLOOR):
    st = suff_stats(scores)
    if st.n < 2:
        raise InsufficientDataError(
            TOO_FEW.format(n=st.n), module='calibration_models'
        )
    # Знаменатель N - 1, как в исходной формуле, а не N из решения ML.
    return GaussianParams(mu=st.mean, sigma2=max(st.ss / (st.n - 1),
                                                 variance_floor))


def fit_bayes(scores, h: NormalGammaHyper = JEFFREYS):
    return predictive(update_posterior(h, suff_stats(scores)))


@dataclass(frozen=True)
class Provenance:
    n_p: int
    n_d: int
    prior: Optional[NormalGammaHyper] = None
    seed: Optional[int] = None
    scheme: Optional[str] = None
    rng: str = RNG_ALGORITHM


@dataclass(frozen=True)
class LlrTransform:
    method: Method
    numerator: Union[GaussianParams, StudentTParams]
    denominator: Union[GaussianParams, StudentTParams]
    provenance: Provenance

    def __post_init__(self):
        expected = PARAMS_BY_METHOD[Method(self.method)]
        for params in (self.numerator, self.denominator):
            if not isinstance(params, expected):
                raise ParameterError(
                    f'метод {self.method} ожидает {expected.__name__}, '
                    f'получено {type(params).__name__}',
                    module='calibration_models',
                )

    def logpdf(self, label, s):
        side = self.numerator if label == 'Hp' else self.denominator
        return side.logpdf(s)


PARAMS_BY_METHOD = {
    Method.ML: GaussianParams,
    Method.BAYES: StudentTParams,
}


def _fit_side(values, side, method, h, variance_floor):
    if len(values) < 2:
        raise InsufficientDataError(
            TOO_FEW.format(n=len(values)),
            side=side,
            module='calibration_models',
        )
    if method == Method.ML:
        return fit_ml(values, variance_floor)
    try:
        return fit_bayes(values, h)
    except ImproperPosteriorError as error:
        raise ImproperPosteriorError(f'{side}: {error.message}') from error


def fit_transform(s: ScoreSet, method, h: NormalGammaHyper = JEFFREYS,
                  variance_floor=VARIANCE_FLOOR, seed=None, scheme=None):
    """Подгоняет числитель по Sp и знаменатель по Sd независимо."""
    method = Method(method)
    return LlrTransform(
        method=method,
        numerator=_fit_side(s.sp_values, 'Hp', method, h, variance_floor),
        denominator=_fit_side(s.sd_values, 'Hd', method, h, variance_floor),
        provenance=Provenance(
            n_p=s.n_p,
            n_d=s.n_d,
            prior=h if method == Method.BAYES else None,
            seed=seed,
            scheme=None if scheme is None else str(scheme),
        ),
    )


def gaussian_llr(numerator: GaussianParams, denominator: GaussianParams, s):
    """LLR пары гауссиан одной квадратичной формой.

    Разность квадратов z_d^2 - z_p^2 раскладывается в произведение
    (z_d - z_p)(z_d + z_p), коэффициенты при s сокращаются заранее.
    Значения за пределами double обрезаются до ``MAX_LLR``.
    """
    s = np.asarray(s, dtype=float)
    scale_p = math.sqrt(numerator.sigma2)
    scale_d = math.sqrt(denominator.sigma2)
    offset_p = numerator.mu / scale_p
    offset_d = denominator.mu / scale_d
    with np.errstate(over='ignore', invalid='ignore'):
        difference = s * (1 / scale_d - 1 / scale_p) + (offset_p - offset_d)
        total = s * (1 / scale_d + 1 / scale_p) - (offset_p + offset_d)
        value = (0.5 * math.log(denominator.sigma2 / numerator.sigma2)
                 + 0.5 * difference * total)
    # NaN возможен только как 0 * inf при равных дисперсиях, там вклад 0.
    return np.nan_to_num(value, nan=0.0, posinf=MAX_LLR, neginf=-MAX_LLR)


def llr(t: LlrTransform, s):
    """Натуральный логарифм отношения правдоподобия для оценки s."""
    if Method(t.method) == Method.ML:
        return gaussian_llr(t.numerator, t.denominator, s)
    return t.numerator.logpdf(s) - t.denominator.logpdf(s)


def _prior_lines(prior):
    if prior is None:
        return [('provenance.prior', 'none')]
    if prior.improper_jeffreys:
        return [('provenance.prior', 'jeffreys')]
    return [('provenance.prior', 'normal_gamma')] + [
        (f'provenance.{name}', prior_value)
        for name, prior_value in (('mu0', prior.mu0), ('kappa0', prior.kappa0),
                                  ('alpha0', prior.alpha0),
                                  ('beta0', prior.beta0))
    ]


def dump_transform(t: LlrTransform, stream: TextIO,
                   digits=SIGNIFICANT_DIGITS):
    """Пишет преобразование в плоском формате ``key = value``."""
    lines = [('method', str(t.method))]
    for side in ('numerator', 'denominator'):
        params = getattr(t, side)
        lines += [(f'{side}.{f.name}', getattr(params, f.name))
                  for f in fields(params)]
    provenance = t.provenance
    lines += [('provenance.np', provenance.n_p),
              ('provenance.nd', provenance.n_d)]
    lines += _prior_lines(provenance.prior)
    lines += [
        ('provenance.seed', provenance.seed),
        ('provenance.scheme', provenance.scheme),
        ('provenance.rng', provenance.rng),
    ]
    for key, value in lines:
        if value is None:
            value = 'none'
        elif isinstance(value, float):
            value = format_score(value, digits)
        stream.write(f'{key} = {value}\n')


def _parse_lines(stream):
    entries = {}
    for number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise TransformFormatError(
                f'строка {number}: ожидается "key = value"'
            )
        entries[key.strip()] = value.strip()
    return entries


def _take(entries, key, convert=str, required=False):
    try:
        raw = entries.pop(key)
    except KeyError:
        raise TransformFormatError(f'нет ключа {key!r}') from None
    if raw == 'none':
        if required:
            raise TransformFormatError(f'{key}: значение обязательно')
        return None
    try:
        return convert(raw)
    except ValueError:
        raise TransformFormatError(
            f'{key}: недопустимое значение {raw!r}'
        ) from None


def load_transform(stream: TextIO):
    entries = _parse_lines(stream)
    method = _take(entries, 'method', Method)
    if method is None:
        raise TransformFormatError('не указан method')
    params_class = PARAMS_BY_METHOD[method]
    sides = {
        side: params_class(**{
            f.name: _take(entries, f'{side}.{f.name}', float, required=True)
            for f in fields(params_class)
        })
        for side in ('numerator', 'denominator')
    }
    n_p = _take(entries, 'provenance.np', int, required=True)
    n_d = _take(entries, 'provenance.nd', int, required=True)
    prior_kind = _take(entries, 'provenance.prior')
    if prior_kind == 'jeffreys':
        prior = JEFFREYS
    elif prior_kind == 'normal_gamma':
        prior = NormalGammaHyper.proper(*(
            _take(entries, f'provenance.{name}', float, required=True)
            for name in ('mu0', 'kappa0', 'alpha0', 'beta0')
        ))
    elif prior_kind is None:
        prior = None
    else:
        raise TransformFormatError(
            f'provenance.prior: неизвестный закон {prior_kind!r}'
        )
    provenance = Provenance(
        n_p=n_p,
        n_d=n_d,
        prior=prior,
        seed=_take(entries, 'provenance.seed', int),
        scheme=_take(entries, 'provenance.scheme'),
        rng=_take(entries, 'provenance.rng'),
    )
    if entries:
        raise TransformFormatError(
            f'лишние ключи: {", ".join(sorted(entries))}'
        )
    return LlrTransform(method, provenance=provenance, **sides)
