import math

from calibration.curves import LN10, score_grid, write_table
from calibration.domain import format_score
from calibration.exceptions import ParameterError
from calibration.lr_models import llr, load_transform

from ._base import CalibrationCommand, add_case_arguments

LLR_DIGITS = 9
NEED_ONE_SOURCE = 'нужно ровно одно из: --score, --grid или дело (--q, --r)'


class Command(CalibrationCommand):
    help = ('Печатает LLR (натуральный и десятичный логарифм) для оценки, '
            'дела или сетки оценок.')

    def add_arguments(self, parser):
        parser.add_argument('transform', help='файл преобразования')
        parser.add_argument('--score', type=float)
        parser.add_argument(
            '--grid', nargs=3, type=float,
            metavar=('START', 'STOP', 'STEP'),
            help='CSV s,llr,llr10 по равномерной сетке',
        )
        add_case_arguments(parser, required=False)

    def handle(self, *args, **options):
        transform = self.read(options['transform'], load_transform)
        case_given = options['q'] is not None or options['r'] is not None
        sources = [options['score'] is not None,
                   options['grid'] is not None,
                   case_given]
        if sum(sources) != 1:
            raise ParameterError(NEED_ONE_SOURCE, module='harness_cli')

        if options['grid'] is not None:
            grid = score_grid(*options['grid'])
            values = llr(transform, grid)
            with self.output() as stream:
                write_table(('s', 'llr', 'llr10'),
                            zip(grid, values, values / LN10), stream,
                            LLR_DIGITS)
            return

        if case_given:
            if None in (options['scores'], options['metadata'],
                        options['q'], options['r']):
                raise ParameterError(
                    'для дела нужны --scores, --metadata, --q и --r',
                    module='harness_cli',
                )
            _, matrix = self.load_dataset(
                options['metadata'], options['scores']
            )
            score = matrix.score(options['q'], options['r'])
        else:
            score = options['score']
            if not math.isfinite(score):
                raise ParameterError(f'оценка должна быть конечной: {score!r}',
                                     module='harness_cli')
        value = float(llr(transform, score))
        self.stdout.write(
            f'{format_score(value + 0.0, LLR_DIGITS)} '
            f'{format_score(value / LN10 + 0.0, LLR_DIGITS)}'
        )
