import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent

# make tests/ importable as plain modules (mock sidecar, protocol suite)
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture
def write_lines(tmp_path):
    def _write(name: str, lines):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def write_tsv(tmp_path):
    def _write(name: str, rows):
        path = tmp_path / name
        path.write_text("\n".join("\t".join(str(c) for c in row) for row in rows) + "\n")
        return str(path)

    return _write


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(name: str, objs):
        path = tmp_path / name
        path.write_text("\n".join(json.dumps(o) for o in objs) + "\n", encoding="utf-8")
        return str(path)

    return _write
