"""
End-to-end expectations for tests/fixtures/golden_dump.txt, tallied by hand.
"""

import json

import pytest

from app.config import AnalysisConfig
from app.models import Category, PreservationMode
from app.metrics.schemas import PivotForm
from app.report.analysis import analyze, analyze_text
from app.report.render import OutputFormat, render


@pytest.fixture
def report(golden_corpus):
    return analyze(golden_corpus, AnalysisConfig())


def test_parse_accounting(golden_corpus):
    stats = golden_corpus.parse_stats
    assert stats.accepted == 60
    assert stats.discarded_privileged == 2
    assert stats.discarded_unparseable == 2
    assert stats.discarded_too_long == 1
    assert stats.skipped_lines == 4
    assert [d.line_number for d in golden_corpus.diagnostics] == [63, 64, 65, 66, 67]


def test_corpus_counts(report):
    assert report.corpus.total == 60
    assert report.corpus.unique == 58


EXPECTED_DISTRIBUTION = {
    Category.DATA_MOVE: (27, 26),
    Category.ARITHMETIC: (8, 7),
    Category.LOGIC: (3, 3),
    Category.CONTROL_FLOW: (3, 3),
    Category.SHIFT_ROTATE: (2, 2),
    Category.SETTING_FLAGS: (2, 2),
    Category.STRING: (2, 2),
    Category.FLOATING_POINT: (2, 2),
    Category.MISC: (3, 3),
    Category.MMX: (2, 2),
    Category.NOP: (2, 2),
    Category.RET: (2, 2),
}


def test_distribution(report):
    dist = report.distribution
    for category, (total, unique) in EXPECTED_DISTRIBUTION.items():
        entry = dist.count(category)
        assert (entry.total, entry.unique) == (total, unique), category
    assert dist.uncategorized_total == 2
    assert dist.privileged_discarded == 2
    assert dist.count(Category.DATA_MOVE).percent == pytest.approx(27 * 100 / 58)


def test_environment_setup(report):
    env = report.env_setup
    assert [(e.name, e.clean, e.side_effect) for e in env.registers] == [
        ("rcx", 4, 2),
        ("rdx", 2, 1),
        ("r8", 1, 1),
        ("r9", 1, 1),
    ]
    assert (env.pivot_clean, env.pivot_side_effect) == (5, 1)
    assert env.pivot_forms == {
        PivotForm.XCHG: 2,
        PivotForm.MOV: 1,
        PivotForm.ADD_SUB: 1,
        PivotForm.POP_RSP: 1,
        PivotForm.LEAVE: 1,
    }
    assert env.call_count == 3
    assert env.call_forms == {"call": 2, "jmp": 1}


def test_useful_gadgets(report):
    assert report.useful.count == 28
    assert report.useful.by_mnemonic == {
        "add": 3, "mov": 3, "neg": 1, "pop": 16, "push": 1, "sub": 1, "xchg": 2, "xor": 1,
    }


def test_quality(report):
    quality = report.quality
    assert quality.graded_count == 27
    assert quality.discarded_count == 1
    assert quality.q_count == 22
    assert [(b.score, b.count) for b in quality.histogram] == [
        (0.0, 17), (0.5, 4), (1.0, 1), (2.0, 3), (2.5, 1), (4.0, 1),
    ]
    assert quality.mean_score == pytest.approx(15.5 / 27)
    assert (quality.min_score, quality.max_score) == (0.0, 4.0)
    assert quality.indeterminate_sps_count == 6


def test_strict_preservation(golden_corpus):
    strict = analyze(golden_corpus, AnalysisConfig(preservation=PreservationMode.STRICT))
    assert strict.useful.count == 27
    # Metric 2 always uses the relaxed rules
    assert strict.env_setup == analyze(golden_corpus).env_setup


def test_unique_only(golden_corpus):
    unique = analyze(golden_corpus, AnalysisConfig(unique_only=True))
    assert unique.corpus.total == 58
    assert unique.useful.count == 26
    assert unique.quality.q_count == 20
    assert unique.env_setup.loads("rcx").clean == 3


def test_table_row(report):
    text = render(report, OutputFormat.TEXT).decode("utf-8")
    assert "Program | rcx | rdx | r8 | r9 | pivot | call | useful | Q" in text
    assert "golden | 4 / 2 | 2 / 1 | 1 / 1 | 1 / 1 | 5 / 1 | 3 | 28 | 22" in text


def test_analysis_is_deterministic(golden_text):
    first = render(analyze_text(golden_text, AnalysisConfig(), "golden"), OutputFormat.JSON)
    second = render(analyze_text(golden_text, AnalysisConfig(), "golden"), OutputFormat.JSON)
    assert first == second


def _assert_matches(expected, actual, path="report"):
    """Every value in expected appears in actual; floats compared approximately"""
    if isinstance(expected, dict):
        for key, value in expected.items():
            assert key in actual, f"{path}.{key} missing"
            _assert_matches(value, actual[key], f"{path}.{key}")
    elif isinstance(expected, list):
        assert len(actual) == len(expected), path
        for position, (want, got) in enumerate(zip(expected, actual)):
            _assert_matches(want, got, f"{path}[{position}]")
    elif isinstance(expected, float):
        assert actual == pytest.approx(expected), path
    else:
        assert actual == expected, path


def test_matches_committed_report(report, golden_path):
    expected = json.loads(golden_path.with_name("golden_report.json").read_text(encoding="utf-8"))
    _assert_matches(expected, json.loads(render(report, OutputFormat.JSON)))


def _cell(text):
    clean, side_effect = text.split(" / ")
    return int(clean.replace(",", "")), int(side_effect.replace(",", ""))


def test_rendered_row_reads_back(report):
    lines = render(report, OutputFormat.TEXT).decode("utf-8").splitlines()
    header = next(line for line in lines if line.startswith("Program | "))
    row = lines[lines.index(header) + 1].split(" | ")
    columns = header.split(" | ")
    assert len(row) == len(columns)
    assert row[0] == report.source_label

    cells = dict(zip(columns[1:], row[1:]))
    for entry in report.env_setup.registers:
        assert _cell(cells[entry.name]) == (entry.clean, entry.side_effect)
    assert _cell(cells["pivot"]) == (report.env_setup.pivot_clean, report.env_setup.pivot_side_effect)
    assert int(cells["call"]) == report.env_setup.call_count
    assert int(cells["useful"]) == report.useful.count
    assert int(cells["Q"]) == report.quality.q_count
