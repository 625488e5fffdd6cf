from calibration.anchoring import (
    AnchoringScheme,
    PoolSpec,
    build_pool,
    make_rng,
    subsample_sd,
    subsample_sp,
)
from calibration.domain import CaseSpec, write_pool
from calibration.exceptions import ParameterError
from calibration.lr_models import (
    JEFFREYS,
    Method,
    NormalGammaHyper,
    dump_transform,
    fit_transform,
)

from ._base import CalibrationCommand, add_case_arguments, setting, speaker_of

BAD_PRIOR = ('--prior: ожидается "jeffreys" или '
             '"mu0,kappa0,alpha0,beta0", получено {value!r}')


def parse_prior(value):
    """Априорный закон из аргумента командной строки."""
    if value is None or value == 'jeffreys':
        return JEFFREYS
    try:
        values = [float(item) for item in value.split(',')]
    except ValueError:
        values = []
    if len(values) != 4:
        raise ParameterError(BAD_PRIOR.format(value=value),
                             module='harness_cli')
    return NormalGammaHyper.proper(*values)


class Command(CalibrationCommand):
    help = ('Строит пулы для дела, выбирает Np оценок Sp и подгоняет '
            'преобразование оценки в LLR.')

    def add_arguments(self, parser):
        add_case_arguments(parser)
        parser.add_argument(
            '--suspect', help='подозреваемый; по умолчанию диктор r'
        )
        parser.add_argument(
            '--scheme', required=True, choices=AnchoringScheme.values
        )
        parser.add_argument('--method', required=True, choices=Method.values)
        parser.add_argument('--np', required=True, type=int, dest='n_p')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--nd-cap', type=int)
        parser.add_argument('--condition-filter')
        parser.add_argument(
            '--prior', default='jeffreys',
            help='"jeffreys" или "mu0,kappa0,alpha0,beta0" (только BAYES)',
        )
        parser.add_argument(
            '--output', help='файл преобразования; по умолчанию stdout'
        )
        parser.add_argument(
            '--dump-pool', help='записать выбранные оценки Sp и Sd в файл'
        )

    def handle(self, *args, **options):
        prior = parse_prior(options['prior'])
        if options['seed'] < 0:
            raise ParameterError('--seed не может быть отрицательным',
                                 module='harness_cli')
        meta, matrix = self.load_dataset(
            options['metadata'], options['scores']
        )
        case = CaseSpec(
            q=options['q'],
            r=options['r'],
            suspect=(options['suspect']
                     or speaker_of(meta, options['r'])),
        )
        scheme = AnchoringScheme(options['scheme'])
        pool = build_pool(
            matrix, meta, PoolSpec(scheme, case, options['condition_filter'])
        )
        rng = make_rng(options['seed'])
        s = subsample_sp(pool, options['n_p'], rng)
        if options['nd_cap'] is not None and s.n_d > options['nd_cap']:
            s = subsample_sd(s, options['nd_cap'], rng)
        transform = fit_transform(
            s,
            options['method'],
            prior,
            setting('VARIANCE_FLOOR'),
            seed=options['seed'],
            scheme=scheme,
        )
        digits = setting('SIGNIFICANT_DIGITS')
        if options['dump_pool']:
            with self.output(options['dump_pool']) as stream:
                write_pool(s, stream, digits)
        with self.output(options['output']) as stream:
            dump_transform(transform, stream, digits)
