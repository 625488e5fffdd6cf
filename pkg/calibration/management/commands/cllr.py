from calibration.evaluation import (
    REPORT_HEADER,
    cllr,
    format_report,
    read_trials,
)

from ._base import CalibrationCommand, setting


class Command(CalibrationCommand):
    help = 'Cllr по файлу испытаний "<case_id> <Hp|Hd> <llr>".'

    def add_arguments(self, parser):
        parser.add_argument('trials', help='файл испытаний')

    def handle(self, *args, **options):
        report = cllr(self.read(options['trials'], read_trials))
        self.stdout.write(','.join(REPORT_HEADER))
        self.stdout.write(
            format_report(report, setting('SIGNIFICANT_DIGITS'))
        )
