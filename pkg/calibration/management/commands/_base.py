"""Общая основа команд: уровень логирования, ошибки и ввод-вывод."""
import io
import logging
from contextlib import contextmanager

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from calibration.domain import load_metadata, load_scores
from calibration.exceptions import CalibrationError, UnknownUtteranceError

VERBOSITY_LEVELS = {
    0: logging.ERROR,
    1: logging.WARNING,
    2: logging.INFO,
    3: logging.DEBUG,
}


def setting(name):
    return settings.CALIBRATION[name]


class CalibrationCommand(BaseCommand):
    """Ошибки расчёта превращаются в CommandError с исходным текстом."""

    def execute(self, *args, **options):
        level = VERBOSITY_LEVELS.get(options.get('verbosity', 1),
                                     logging.DEBUG)
        logging.getLogger('calibration').setLevel(level)
        try:
            return super().execute(*args, **options)
        except (CalibrationError, OSError) as error:
            raise CommandError(str(error)) from error

    @contextmanager
    def output(self, path=None):
        """Файл для записи или, без пути, стандартный вывод команды."""
        if path is None:
            buffer = io.StringIO()
            yield buffer
            self.stdout.write(buffer.getvalue(), ending='')
            return
        with open(path, 'w', encoding='utf-8', newline='') as stream:
            yield stream

    def read(self, path, loader, *args):
        with open(path, encoding='utf-8') as stream:
            return loader(stream, *args)

    def load_dataset(self, metadata_path, scores_path):
        meta = self.read(metadata_path, load_metadata)
        matrix = self.read(scores_path, load_scores, meta,
                           setting('SYMMETRY_TOLERANCE'))
        return meta, matrix


def speaker_of(meta, utt_id):
    for record in meta:
        if record.utt_id == utt_id:
            return record.speaker_id
    raise UnknownUtteranceError(
        f'utt_id {utt_id!r} отсутствует в метаданных'
    )


def add_case_arguments(parser, required=True):
    group = parser.add_argument_group('дело')
    group.add_argument('--scores', required=required,
                       help='файл оценок "<utt_id_1> <utt_id_2> <score>"')
    group.add_argument('--metadata', required=required,
                       help='файл метаданных "<utt_id> <speaker_id> [<cond>]"')
    group.add_argument('--q', required=required, help='спорная запись')
    group.add_argument('--r', required=required, help='эталонная запись')
