from __future__ import annotations

import json
from pathlib import Path

import pytest

from flprobe import ingest, load_kb, make_seed_set

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_json(name: str):
    with open(FIXTURES / name, encoding="utf-8") as handle:
        return json.load(handle)


@pytest.fixture(scope="session")
def micro_kb():
    return load_kb(FIXTURES / "kb_micro.json")


@pytest.fixture(scope="session")
def kb20():
    return load_kb(FIXTURES / "kb_20.json")


@pytest.fixture(scope="session")
def kqa_records():
    return ingest("kqa_pro", FIXTURES / "kqa_pro_100.json").records


@pytest.fixture(scope="session")
def kqa_seed_set(kqa_records):
    return make_seed_set(kqa_records)


@pytest.fixture(scope="session")
def oracle_programs():
    return load_json("kopl_oracle_programs.json")
