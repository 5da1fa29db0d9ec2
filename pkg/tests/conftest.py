import sys

import pytest

from impactscore.synthetic import marker_corpus, two_token_corpus


HEADER = "id\ttext\ttask_1\n"


@pytest.fixture
def write_tsv(tmp_path):
    def _write(rows, header=HEADER, name="data.tsv"):
        path = tmp_path / name
        path.write_text(header + "".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def small_marker_corpus():
    return marker_corpus(n_docs=120, seed=3)


@pytest.fixture(scope="session")
def toy_corpus():
    return two_token_corpus(40, seed=0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
