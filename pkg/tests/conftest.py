import os
import sys

import pytest

from protagent import domains, homology
from protagent.executor import build_standard_registry
from protagent.seq import Sequence

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

MSCL_RESIDUES = (
    "MLKEFKEFALKGNVLDLAIAVVMGAAFNKIVTSLVTYIIMPLIGKIFGSVDFAKDWEFWG"
    "IKYGLFIQSIIDFIIVAIALFIFVKIANTLVKKEEPEEEIEENTVLLTEIRDLLRAK"
)


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture(scope="session")
def mscl_seq() -> Sequence:
    return Sequence(id="query", residues=MSCL_RESIDUES)


@pytest.fixture(scope="session")
def store_entries():
    return homology.load_reference_store(
        data_path("store.fasta"), data_path("store.annotations.jsonl")
    )


@pytest.fixture(scope="session")
def store_index(store_entries):
    return homology.build_index(store_entries)


@pytest.fixture(scope="session")
def store_annotations(store_entries):
    return {e.accession: e.annotation for e in store_entries}


@pytest.fixture(scope="session")
def hmm_library():
    with open(data_path("toy.hmm"), encoding="utf-8") as fh:
        return domains.parse_hmm_library(fh.read())


@pytest.fixture(scope="session")
def registry(store_index, store_annotations, hmm_library):
    return build_standard_registry(
        index=store_index, annotations=store_annotations, hmm_library=hmm_library
    )


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for label, ok in results:
        terminalreporter.write_line(f"  [{'PASS' if ok else 'FAIL'}] {label}")
