from calibration.curves import curve_table, score_grid, write_table
from calibration.lr_models import load_transform

from ._base import CalibrationCommand


class Command(CalibrationCommand):
    help = ('Таблица для графиков: LLR и логарифмы плотностей классов '
            'каждого преобразования на сетке оценок. Колонки llr_ml и '
            'llr_bayes появляются вместе, только если переданы оба файла: '
            'преобразование ML и преобразование BAYES.')

    def add_arguments(self, parser):
        parser.add_argument(
            'transforms', nargs='+',
            help='файлы преобразований ML и BAYES, методы различны',
        )
        parser.add_argument('--start', type=float, required=True)
        parser.add_argument('--stop', type=float, required=True)
        parser.add_argument('--step', type=float, required=True)
        parser.add_argument('--output', help='CSV; по умолчанию stdout')

    def handle(self, *args, **options):
        grid = score_grid(options['start'], options['stop'], options['step'])
        transforms = [self.read(path, load_transform)
                      for path in options['transforms']]
        header, rows = curve_table(transforms, grid)
        with self.output(options['output']) as stream:
            write_table(header, rows, stream)
