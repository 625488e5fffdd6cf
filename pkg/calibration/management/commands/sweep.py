from pathlib import Path

from calibration.config import load_sweep_config
from calibration.exceptions import ParameterError
from calibration.sweep import (
    SweepConfig,
    run_sweep,
    summarize,
    write_manifest,
    write_rows,
    write_summary,
)

from ._base import CalibrationCommand, setting


def companion_paths(output):
    """Пути сводки и описания запуска рядом с основным CSV."""
    output = Path(output)
    return (output.with_name(f'{output.stem}_summary.csv'),
            output.with_name(f'{output.stem}_run.txt'))


class Command(CalibrationCommand):
    help = ('Эксперимент с разреженностью Sp: Cllr для каждой схемы, '
            'метода, Np и повтора.')

    def add_arguments(self, parser):
        parser.add_argument(
            '--config', help='INI-файл эксперимента; без него эталонный'
        )
        parser.add_argument('--output', required=True, help='CSV строк')
        parser.add_argument('--seed', type=int, help='заменяет base_seed')
        parser.add_argument('--jobs', type=int,
                            help='число потоков для повторов')

    def defaults(self):
        return {
            'min_suspect_utts': setting('MIN_SUSPECT_UTTS'),
            'n_cases': setting('N_CASES'),
            'same_origin_fraction': setting('SAME_ORIGIN_FRACTION'),
            'variance_floor': setting('VARIANCE_FLOOR'),
            'jobs': setting('JOBS'),
        }

    def handle(self, *args, **options):
        overrides = {}
        if options['seed'] is not None:
            if options['seed'] < 0:
                raise ParameterError('--seed не может быть отрицательным',
                                     module='harness_cli')
            overrides['base_seed'] = options['seed']
        if options['jobs'] is not None:
            if options['jobs'] < 1:
                raise ParameterError('--jobs должно быть не меньше 1',
                                     module='harness_cli')
            overrides['jobs'] = options['jobs']
        if options['config']:
            config = load_sweep_config(
                options['config'], self.defaults(), **overrides
            )
        else:
            config = SweepConfig(**{**self.defaults(), **overrides})

        rows = run_sweep(config)
        summary = summarize(rows)
        digits = setting('SIGNIFICANT_DIGITS')
        summary_path, manifest_path = companion_paths(options['output'])
        with self.output(options['output']) as stream:
            write_rows(rows, stream, digits)
        with self.output(summary_path) as stream:
            write_summary(summary, stream, digits)
        with self.output(manifest_path) as stream:
            write_manifest(config, stream)
        with self.output() as stream:
            write_summary(summary, stream, digits)

        errors = sum(row.error is not None for row in rows)
        if errors:
            self.stderr.write(self.style.WARNING(
                f'Ячеек с ошибкой: {errors} из {len(rows)}'
            ))
