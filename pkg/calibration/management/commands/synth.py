from pathlib import Path

from calibration.config import load_synth_config
from calibration.domain import save_metadata, save_scores
from calibration.synthgen import SynthConfig, generate

from ._base import CalibrationCommand, setting

METADATA_FILE = 'metadata.txt'
SCORES_FILE = 'scores.txt'


class Command(CalibrationCommand):
    help = ('Генерирует синтетическую популяцию дикторов: '
            f'{METADATA_FILE} и {SCORES_FILE} в каталоге --output.')

    def add_arguments(self, parser):
        parser.add_argument(
            '--config', help='INI-файл с секцией [synth]'
        )
        parser.add_argument(
            '--output', required=True, help='каталог для файлов'
        )
        parser.add_argument(
            '--seed', type=int, help='заменяет seed из конфигурации'
        )

    def handle(self, *args, **options):
        overrides = {}
        if options['seed'] is not None:
            overrides['seed'] = options['seed']
        if options['config']:
            config = load_synth_config(options['config'], **overrides)
        else:
            config = SynthConfig(**overrides)
        meta, matrix = generate(config)

        output = Path(options['output'])
        output.mkdir(parents=True, exist_ok=True)
        with self.output(output / METADATA_FILE) as stream:
            save_metadata(meta, stream)
        with self.output(output / SCORES_FILE) as stream:
            save_scores(matrix, stream, setting('SIGNIFICANT_DIGITS'))
        self.stdout.write(self.style.SUCCESS(
            f'{len(meta)} высказываний, {matrix.n_pairs} оценок -> {output}'
        ))
