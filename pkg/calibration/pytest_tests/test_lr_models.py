"""Тесты моделей ML и полностью байесовской калибровки.

Прогнозная плотность при неинформативном законе дополнительно
сверяется с прямым численным интегрированием гауссианы по
апостериорному распределению параметров (mu, lambda).
"""
import io
import itertools
import math
import re

import numpy as np
import pytest  # type: ignore
from pytest_lazy_fixtures import lf  # type: ignore
from scipy import integrate, special  # type: ignore

from calibration.domain import ScoreSet  # type: ignore
from calibration.exceptions import (  # type: ignore
    ImproperPosteriorError,
    InsufficientDataError,
    ParameterError,
    TransformFormatError,
)
from calibration.lr_models import (  # type: ignore
    JEFFREYS,
    VARIANCE_FLOOR,
    GaussianParams,
    Method,
    NormalGammaHyper,
    NormalGammaPosterior,
    StudentTParams,
    SufficientStats,
    dump_transform,
    fit_bayes,
    fit_ml,
    fit_transform,
    gaussian_logpdf,
    llr,
    load_transform,
    predictive,
    student_t_logpdf,
    suff_stats,
    update_posterior,
)

SCORE_SETS = (lf('symmetric_set'), lf('sparse_set'), lf('wide_set'))
PROPER = NormalGammaHyper.proper(mu0=0.0, kappa0=1.0, alpha0=1.0, beta0=1.0)


def _normal_pdf(x, mean, variance):
    return math.exp(-(x - mean) ** 2 / (2 * variance)) / math.sqrt(
        2 * math.pi * variance
    )


def _density_by_integration(post: NormalGammaPosterior, s):
    """Прогнозная плотность как двойной интеграл по (mu, log lambda).

    lambda ~ Gamma(alpha_n, rate=beta_n), mu | lambda ~ N(mu_n, 1/(kappa_n
    lambda)), s | mu, lambda ~ N(mu, 1/lambda).
    """
    kappa, alpha, beta = post.kappa_n, post.alpha_n, post.beta_n
    log_norm = alpha * math.log(beta) - special.gammaln(alpha)
    center = (kappa * post.mu_n + s) / (kappa + 1)

    def over_mu(u):
        lam = math.exp(u)
        width = 1 / math.sqrt((kappa + 1) * lam)
        value, _ = integrate.quad(
            lambda mu: (_normal_pdf(s, mu, 1 / lam)
                        * _normal_pdf(mu, post.mu_n, 1 / (kappa * lam))),
            center - 12 * width, center + 12 * width,
            epsabs=0, epsrel=1e-10,
        )
        # Плотность гамма-распределения, умноженная на якобиан d lambda/du.
        return value * math.exp(log_norm + alpha * u - beta * lam)

    spread = kappa * (s - post.mu_n) ** 2 / (2 * (kappa + 1))
    peak = math.log((alpha + 0.5) / (beta + spread))
    value, _ = integrate.quad(
        over_mu, peak - 40 / (alpha + 0.5), peak + 6,
        points=[peak], epsabs=0, epsrel=1e-9, limit=200,
    )
    return value


def test_suff_stats_examples():
    assert suff_stats([-1, 1]) == SufficientStats(n=2, mean=0.0, ss=2.0)
    assert suff_stats([5]) == SufficientStats(n=1, mean=5.0, ss=0.0)
    assert suff_stats([2, 4, 6]) == SufficientStats(n=3, mean=4.0, ss=8.0)


def test_suff_stats_is_stable_for_large_offsets():
    rng = np.random.default_rng(11)
    values = 1e8 + rng.normal(0, 1, 1000)
    reference = math.fsum((v - math.fsum(values) / len(values)) ** 2
                          for v in values)
    assert suff_stats(values).ss == pytest.approx(reference, rel=1e-9)


@pytest.mark.parametrize('scores, error', [
    ([], InsufficientDataError),
    ([1.0, float('nan')], ParameterError),
    ([1.0, float('inf')], ParameterError),
])
def test_suff_stats_rejects_bad_input(scores, error):
    with pytest.raises(error):
        suff_stats(scores)


def test_fit_ml_examples():
    assert fit_ml([-1, 1]) == GaussianParams(mu=0.0, sigma2=2.0)
    assert fit_ml([2, 4, 6]) == GaussianParams(mu=4.0, sigma2=4.0)
    # Нулевой разброс заменяется нижней границей дисперсии.
    assert fit_ml([3, 3]) == GaussianParams(mu=3.0, sigma2=VARIANCE_FLOOR)
    with pytest.raises(InsufficientDataError):
        fit_ml([5])


def test_gaussian_logpdf_examples():
    assert gaussian_logpdf(GaussianParams(0, 1), 0) == pytest.approx(
        -0.9189385332, abs=1e-10
    )
    assert gaussian_logpdf(GaussianParams(0, 2), 0) == pytest.approx(
        -1.2655121235, abs=1e-10
    )
    p = GaussianParams(1.5, 0.7)
    assert gaussian_logpdf(p, 1.5 + 2.3) == pytest.approx(
        gaussian_logpdf(p, 1.5 - 2.3), abs=1e-12
    )


def test_student_t_logpdf_examples():
    assert student_t_logpdf(StudentTParams(1, 0, 1), 0) == pytest.approx(
        math.log(1 / math.pi), abs=1e-10
    )
    assert student_t_logpdf(
        StudentTParams(1, 0, math.sqrt(3)), 0
    ) == pytest.approx(math.log(0.18377629), abs=1e-7)
    t = StudentTParams(3.5, -2.0, 0.8)
    assert student_t_logpdf(t, -2.0 + 4.1) == pytest.approx(
        student_t_logpdf(t, -2.0 - 4.1), abs=1e-12
    )


@pytest.mark.parametrize('params_class, values', [
    (GaussianParams, (0.0, 0.0)),
    (GaussianParams, (float('nan'), 1.0)),
    (StudentTParams, (0.0, 0.0, 1.0)),
    (StudentTParams, (1.0, 0.0, -1.0)),
])
def test_invalid_params(params_class, values):
    with pytest.raises(ParameterError):
        params_class(*values)


def test_jeffreys_posterior_example():
    post = update_posterior(JEFFREYS, suff_stats([-1, 1]))
    assert (post.mu_n, post.kappa_n, post.alpha_n, post.beta_n) == (
        0.0, 2.0, 0.5, 1.0
    )
    t = predictive(post)
    assert (t.nu, t.loc) == (1.0, 0.0)
    assert t.scale == pytest.approx(math.sqrt(3), abs=1e-15)


def test_jeffreys_predictive_reduces_to_sample_moments():
    scores = [0.3, 1.9, -0.4, 2.2, 1.1]
    st = suff_stats(scores)
    t = fit_bayes(scores)
    sample_variance = st.ss / (st.n - 1)
    assert t.nu == st.n - 1
    assert t.loc == pytest.approx(st.mean, abs=1e-15)
    assert t.scale ** 2 == pytest.approx(
        sample_variance * (1 + 1 / st.n), rel=1e-12
    )


def test_proper_posterior_example():
    post = update_posterior(PROPER, suff_stats([-1, 1]))
    assert (post.mu_n, post.kappa_n, post.alpha_n, post.beta_n) == (
        0.0, 3.0, 2.0, 2.0
    )


def test_proper_posterior_matches_numerical_normalization():
    """Моменты prior x likelihood на сетке (mu, lambda) и в замкнутом виде."""
    data = [-1.0, 1.0]

    def unnormalized(mu, lam):
        prior = (math.exp(-lam)
                 * _normal_pdf(mu, PROPER.mu0, 1 / (PROPER.kappa0 * lam)))
        likelihood = math.prod(_normal_pdf(x, mu, 1 / lam) for x in data)
        return prior * likelihood

    def moment(weight):
        value, _ = integrate.dblquad(
            lambda mu, lam: weight(mu, lam) * unnormalized(mu, lam),
            1e-12, 40,
            lambda lam: -15 / math.sqrt(lam),
            lambda lam: 15 / math.sqrt(lam),
            epsabs=0, epsrel=1e-9,
        )
        return value

    total = moment(lambda mu, lam: 1.0)
    post = update_posterior(PROPER, suff_stats(data))
    mean_lambda = moment(lambda mu, lam: lam) / total
    mean_mu2 = moment(lambda mu, lam: mu * mu) / total
    assert mean_lambda == pytest.approx(post.alpha_n / post.beta_n, rel=1e-6)
    assert mean_mu2 == pytest.approx(
        post.beta_n / (post.kappa_n * (post.alpha_n - 1)), rel=1e-6
    )


def test_jeffreys_rejects_degenerate_data():
    with pytest.raises(ImproperPosteriorError):
        update_posterior(JEFFREYS, suff_stats([3.0, 3.0]))
    with pytest.raises(ImproperPosteriorError):
        update_posterior(JEFFREYS, suff_stats([3.0]))


def test_predictive_requires_positive_alpha():
    with pytest.raises(ImproperPosteriorError):
        predictive(NormalGammaPosterior(0.0, 1.0, 0.0, 1.0))


def test_proper_hyper_must_be_positive():
    with pytest.raises(ParameterError):
        NormalGammaHyper.proper(0.0, 0.0, 1.0, 1.0)
    # Неинформативный закон всегда приводится к пределу (0, -1/2, 0).
    h = NormalGammaHyper(kappa0=5.0, alpha0=3.0, beta0=2.0)
    assert (h.kappa0, h.alpha0, h.beta0) == (0.0, -0.5, 0.0)


@pytest.mark.parametrize('order', [
    (0, 1, 2, 3),
    (3, 2, 1, 0),
    (2, 0, 3, 1),
])
def test_sequential_updates_equal_batch(order):
    data = [0.4, -1.3, 2.2, 0.9]
    batch = update_posterior(PROPER, suff_stats(data))
    h = PROPER
    for position in order:
        h = update_posterior(
            h, SufficientStats(n=1, mean=data[position], ss=0.0)
        ).as_hyper()
    for name, value in (('mu0', batch.mu_n), ('kappa0', batch.kappa_n),
                        ('alpha0', batch.alpha_n), ('beta0', batch.beta_n)):
        assert getattr(h, name) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize('n', [2, 5, 20])
def test_jeffreys_predictive_matches_integration(n, subtests):
    rng = np.random.default_rng(n)
    data = [-1.0, 1.0] if n == 2 else rng.normal(0.7, 1.8, n)
    post = update_posterior(JEFFREYS, suff_stats(data))
    t = predictive(post)
    for s in t.loc + t.scale * np.linspace(-5, 5, 11):
        with subtests.test(n=n, s=float(s)):
            expected = _density_by_integration(post, float(s))
            actual = math.exp(student_t_logpdf(t, float(s)))
            assert actual == pytest.approx(expected, rel=1e-4)


def test_jeffreys_density_at_zero():
    post = update_posterior(JEFFREYS, suff_stats([-1.0, 1.0]))
    assert _density_by_integration(post, 0.0) == pytest.approx(
        1 / (math.pi * math.sqrt(3)), rel=1e-4
    )


@pytest.mark.parametrize('scores', [
    [-1.0, 1.0],
    [3.1, 4.4, 5.2],
    [0.3, 1.9, -0.4, 2.2, 1.1, 0.8],
])
def test_predictive_is_normalized(scores):
    t = fit_bayes(scores)
    mass, _ = integrate.quad(
        lambda s: math.exp(student_t_logpdf(t, s)),
        t.loc - 1000 * t.scale, t.loc + 1000 * t.scale,
        points=[t.loc], limit=500,
    )
    # Верхняя граница с допуском квадратуры.
    assert 0.999 <= mass <= 1.0 + 1e-8


def test_bayes_converges_to_ml():
    rng = np.random.default_rng(100)
    scores = rng.normal(1.5, 2.0, 100_000)
    ml = fit_ml(scores)
    bayes = fit_bayes(scores)
    sigma = math.sqrt(ml.sigma2)
    grid = np.linspace(ml.mu - 5 * sigma, ml.mu + 5 * sigma, 2001)
    gap = np.max(np.abs(student_t_logpdf(bayes, grid)
                        - gaussian_logpdf(ml, grid)))
    assert gap < 0.01


def test_fit_transform_ml(symmetric_set):
    t = fit_transform(symmetric_set, Method.ML)
    assert t.numerator == GaussianParams(mu=3.0, sigma2=2.0)
    assert t.denominator == GaussianParams(mu=-3.0, sigma2=2.0)
    assert (t.provenance.n_p, t.provenance.n_d) == (2, 2)
    assert t.provenance.prior is None


def test_fit_transform_bayes(symmetric_set):
    t = fit_transform(symmetric_set, Method.BAYES)
    for params, loc in ((t.numerator, 3.0), (t.denominator, -3.0)):
        assert (params.nu, params.loc) == (1.0, loc)
        assert params.scale == pytest.approx(math.sqrt(3), abs=1e-15)
    assert t.provenance.prior == JEFFREYS


def test_fit_transform_names_failing_side():
    with pytest.raises(InsufficientDataError) as error:
        fit_transform(ScoreSet([1.0], [0.0, -1.0]), Method.ML)
    assert error.value.side == 'Hp'
    with pytest.raises(ImproperPosteriorError, match='Hd'):
        fit_transform(ScoreSet([1.0, 2.0], [0.5, 0.5]), Method.BAYES)


def test_llr_examples(symmetric_set):
    ml = fit_transform(symmetric_set, Method.ML)
    bayes = fit_transform(symmetric_set, Method.BAYES)
    assert llr(ml, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert llr(ml, 3.0) == pytest.approx(9.0, abs=1e-12)
    assert abs(llr(bayes, 30.0)) < abs(llr(ml, 30.0))


def test_llr_is_finite_far_away(symmetric_set):
    for method in Method:
        t = fit_transform(symmetric_set, method)
        values = llr(t, np.array([-1e6, -40.0, 40.0, 1e6]))
        assert np.all(np.isfinite(values))


@pytest.mark.parametrize('score_set', (lf('symmetric_set'), lf('wide_set')))
def test_llr_is_finite_beyond_squares(score_set):
    for method in Method:
        t = fit_transform(score_set, method)
        values = llr(t, np.array([-1e160, 1e160]))
        assert np.all(np.isfinite(values))


@pytest.mark.parametrize('score_set', SCORE_SETS)
def test_tail_moderation(score_set):
    ml = fit_transform(score_set, Method.ML)
    bayes = fit_transform(score_set, Method.BAYES)
    assert ml.numerator.mu > ml.denominator.mu
    s = ml.numerator.mu + 10 * math.sqrt(ml.numerator.sigma2)
    assert abs(llr(bayes, s)) < abs(llr(ml, s))


@pytest.mark.parametrize('method', list(Method))
def test_sides_are_fitted_independently(sparse_set, method):
    first = fit_transform(sparse_set, method)
    other = fit_transform(
        ScoreSet(sparse_set.sp_values, [10.0, 11.5, 9.0]), method
    )
    assert first.numerator == other.numerator
    assert first.denominator != other.denominator


def test_affine_invariance():
    rng = np.random.default_rng(2016)
    worst = 0.0
    for _ in range(100):
        sp = rng.normal(rng.uniform(1, 4), rng.uniform(0.5, 2),
                        rng.integers(2, 20))
        sd = rng.normal(rng.uniform(-4, -1), rng.uniform(0.5, 2),
                        rng.integers(2, 50))
        a = rng.choice([-1, 1]) * rng.uniform(0.1, 10)
        b = rng.uniform(-10, 10)
        s = rng.uniform(-3, 3)
        for method in Method:
            original = fit_transform(ScoreSet(sp, sd), method)
            moved = fit_transform(ScoreSet(a * sp + b, a * sd + b), method)
            worst = max(worst,
                        abs(llr(original, s) - llr(moved, a * s + b)))
    assert worst < 1e-9


def test_transform_survives_dump_and_load(sparse_set):
    for method, prior in itertools.product(Method, (JEFFREYS, PROPER)):
        t = fit_transform(sparse_set, method, prior, seed=17, scheme='RA')
        stream = io.StringIO()
        dump_transform(t, stream)
        assert load_transform(io.StringIO(stream.getvalue())) == t


def test_dump_format(symmetric_set):
    stream = io.StringIO()
    dump_transform(fit_transform(symmetric_set, Method.ML, seed=3), stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == 'method = ML'
    assert 'numerator.mu = 3' in lines
    assert 'provenance.np = 2' in lines
    assert 'provenance.prior = none' in lines
    assert 'provenance.rng = numpy.random.PCG64' in lines


@pytest.mark.parametrize('edit', [
    lambda text: text.replace('method = ML', 'method = MAP'),
    lambda text: text.replace('numerator.mu = 3\n', ''),
    lambda text: text + 'extra = 1\n',
    lambda text: text.replace('numerator.mu = 3', 'numerator.mu = x'),
    lambda text: text.replace('numerator.mu = 3', 'numerator.mu'),
    lambda text: text.replace('numerator.mu = 3', 'numerator.mu = none'),
    lambda text: text.replace('provenance.np = 2', 'provenance.np = none'),
])
def test_load_rejects_broken_files(symmetric_set, edit):
    stream = io.StringIO()
    dump_transform(fit_transform(symmetric_set, Method.ML), stream)
    with pytest.raises(TransformFormatError):
        load_transform(io.StringIO(edit(stream.getvalue())))


def test_load_requires_prior_hyperparameters(symmetric_set):
    stream = io.StringIO()
    dump_transform(fit_transform(symmetric_set, Method.BAYES, PROPER), stream)
    text = re.sub(r'provenance\.beta0 = .*', 'provenance.beta0 = none',
                  stream.getvalue())
    with pytest.raises(TransformFormatError):
        load_transform(io.StringIO(text))
