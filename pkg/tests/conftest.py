import sys
from pathlib import Path

import pytest

sys.setrecursionlimit(100_000)

FIXTURE_LIB = Path(__file__).resolve().parent.parent / "src" / "maudelet" / \
    "fixtures" / "lib"


@pytest.fixture(scope="session")
def database():
    from maudelet.modules import ModuleDatabase
    from maudelet.parser import parse_units
    from maudelet.prelude import load_prelude

    db = load_prelude(ModuleDatabase())
    for path in sorted(FIXTURE_LIB.glob("*.maude")):
        for unit in parse_units(path.read_text()):
            if not isinstance(unit, list):
                db.insert(unit)
    return db


def load_fixture_module(db, name):
    return db.get(name)


@pytest.fixture(scope="session")
def pfun(database):
    return database.get("PFUN")


@pytest.fixture(scope="session")
def ac_nat(database):
    return database.get("AC-NAT")


@pytest.fixture(scope="session")
def term_mod(database):
    return database.get("TERM")


@pytest.fixture(scope="session")
def hanoi(database):
    return database.get("HANOI")
