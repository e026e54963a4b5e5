import pytest

from healthbroker.abe import cpabe
from healthbroker.config import ApiConfig, build_service

LEVEL = 80  # test parameter set; 128 is exercised explicitly where relevant


@pytest.fixture(scope="session")
def abe_pair():
    return cpabe.setup(LEVEL)


@pytest.fixture(scope="session")
def pp(abe_pair):
    return abe_pair[0]


@pytest.fixture(scope="session")
def msk(abe_pair):
    return abe_pair[1]


def make_service(tmp_path=None, **overrides):
    kwargs = dict(security_level=LEVEL, test_seed="svc-test")
    if tmp_path is not None:
        kwargs["log_dir"] = str(tmp_path / "logs")
        kwargs["database_path"] = str(tmp_path / "broker.db")
    kwargs.update(overrides)
    return build_service(ApiConfig(**kwargs))


@pytest.fixture()
def service(tmp_path):
    svc, inspector = make_service(tmp_path)
    yield svc
    inspector.stop()


@pytest.fixture()
def service_and_inspector(tmp_path):
    svc, inspector = make_service(tmp_path)
    yield svc, inspector
    inspector.stop()
