import os
import pathlib

import pytest


@pytest.fixture(scope="session")
def data_dir():
    default = pathlib.Path(__file__).resolve().parent.parent / "data"
    return pathlib.Path(os.environ.get("LEGALRANK_TEST_DATA", default))
