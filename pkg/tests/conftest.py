import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import make_fixture_dataset  # noqa: E402

from mrclens.squad_io import parse_dataset, serialize_dataset  # noqa: E402

REAL_DEV_ENV_VAR = "MRCLENS_SQUAD_DEV"


@pytest.fixture
def fixture_dataset():
    return make_fixture_dataset()


@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "fixture.json"
    path.write_bytes(serialize_dataset(make_fixture_dataset()))
    return path


def real_dev_path() -> Path | None:
    """Location of the real SQuAD v1.1 dev file, if the user provided one."""
    env = os.environ.get(REAL_DEV_ENV_VAR)
    if env and Path(env).is_file():
        return Path(env)
    bundled = Path(__file__).parent / "data" / "dev-v1.1.json"
    if bundled.is_file():
        return bundled
    return None


@pytest.fixture
def real_dev_dataset():
    path = real_dev_path()
    if path is None:
        pytest.skip(
            "real SQuAD v1.1 dev file not available; set MRCLENS_SQUAD_DEV or place "
            "it at tests/data/dev-v1.1.json to run real-data checks"
        )
    return parse_dataset(path.read_bytes())
