import json
import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures", "oracle_values.json")


@pytest.fixture(scope="session")
def oracle_values():
    with open(FIXTURES, "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def m_star(oracle_values):
    return oracle_values["double_well_mean"]["value"]
