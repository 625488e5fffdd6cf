"""Фикстуры для тестирования приложения калибровки.

Содержит:

Игрушечную популяцию из трёх дикторов A:{a1..a4}, B:{b1..b3}, C:{c1..c3}
с детерминированной матрицей оценок

Наборы обучающих оценок Sp/Sd

Файлы метаданных и оценок во временном каталоге
"""
import pytest  # type: ignore

from calibration.domain import (  # type: ignore
    CaseSpec,
    ScoreMatrix,
    ScoreSet,
    UtteranceRecord,
    save_metadata,
    save_scores,
)

TOY_SPEAKERS = {
    'A': ('a1', 'a2', 'a3', 'a4'),
    'B': ('b1', 'b2', 'b3'),
    'C': ('c1', 'c2', 'c3'),
}
TOY_CONDITIONS = {
    'a1': 'tel', 'a2': 'mic', 'a3': 'tel', 'a4': 'mic',
    'b1': 'tel', 'b2': 'mic', 'b3': 'tel',
    'c1': 'mic', 'c2': 'tel', 'c3': 'mic',
}


def toy_score(position_u, position_v, same_speaker):
    """Оценка пары по позициям высказываний; все значения различны."""
    i, j = sorted((position_u, position_v))
    base = 3.0 if same_speaker else -3.0
    return base + 0.1 * i + 0.01 * j


@pytest.fixture
def toy_meta():
    """
    Метаданные игрушечной популяции.

    Returns:
        list: Записи UtteranceRecord в порядке a1..a4, b1..b3, c1..c3
    """
    return [
        UtteranceRecord(utt_id, speaker, TOY_CONDITIONS[utt_id])
        for speaker, utts in TOY_SPEAKERS.items()
        for utt_id in utts
    ]


@pytest.fixture
def toy_matrix(toy_meta):
    """Полная симметричная матрица игрушечной популяции."""
    pairs = []
    for i, u in enumerate(toy_meta):
        for j, v in enumerate(toy_meta):
            if i < j:
                same = u.speaker_id == v.speaker_id
                pairs.append((u.utt_id, v.utt_id, toy_score(i, j, same)))
    return ScoreMatrix.from_pairs(toy_meta, pairs)


@pytest.fixture
def different_origin_case():
    """Дело q=b1, r=a1: спорная запись не от подозреваемого."""
    return CaseSpec(q='b1', r='a1', suspect='A')


@pytest.fixture
def same_origin_case():
    """Дело q=a2, r=a1: спорная запись от подозреваемого."""
    return CaseSpec(q='a2', r='a1', suspect='A')


@pytest.fixture
def symmetric_set():
    """
    Симметричный набор: Sp = {2, 4}, Sd = {-4, -2}.

    Обе стороны имеют одинаковый разброс, средние ±3.
    """
    return ScoreSet([2.0, 4.0], [-4.0, -2.0])


@pytest.fixture
def sparse_set():
    """Типичная разреженная ситуация: три оценки Sp против восьми Sd."""
    return ScoreSet([3.1, 4.4, 5.2],
                    [-4.5, -3.8, -3.2, -3.0, -2.9, -2.4, -2.0, -1.4])


@pytest.fixture
def wide_set():
    """Sp и Sd с разными дисперсиями: 5.625 и 8.5."""
    return ScoreSet([1.0, 2.5, 4.0, 5.5, 7.0],
                    [-8.0, -5.0, -4.0, -3.0, 0.0])


@pytest.fixture
def toy_files(tmp_path, toy_meta, toy_matrix):
    """
    Файлы игрушечной популяции во временном каталоге.

    Args:
        tmp_path: Встроенная фикстура pytest с временным каталогом
        toy_meta: Метаданные игрушечной популяции
        toy_matrix: Матрица оценок игрушечной популяции

    Returns:
        tuple: Пути к файлу метаданных и файлу оценок
    """
    metadata_path = tmp_path / 'metadata.txt'
    scores_path = tmp_path / 'scores.txt'
    with open(metadata_path, 'w', encoding='utf-8') as stream:
        save_metadata(toy_meta, stream)
    with open(scores_path, 'w', encoding='utf-8') as stream:
        save_scores(toy_matrix, stream)
    return metadata_path, scores_path
