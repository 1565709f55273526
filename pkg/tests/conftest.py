import numpy as np
import pytest

from heiscurv import NormSpec, TrigTable, build_norm

SPECS = {
    "euclidean": NormSpec("euclidean", {}),
    "diag14": NormSpec("inner_product", {"matrix": [[1.0, 0.0], [0.0, 4.0]]}),
    "skew": NormSpec("inner_product", {"matrix": [[2.0, 0.5], [0.5, 1.0]]}),
    "l4": NormSpec("lp", {"p": 4.0}),
    "l43": NormSpec("lp", {"p": 4.0 / 3.0}),
    "interp": NormSpec("interpolated", {"q": 4.0, "t": 0.5}),
}


def wobbly_samples(n=40):
    th = np.linspace(0.0, np.pi, n, endpoint=False)
    return np.c_[np.cos(th) * (1 + 0.1 * np.cos(2 * th)), np.sin(th) * (1 - 0.05 * np.cos(2 * th))]


SPECS["samples"] = NormSpec("boundary_samples", {"points": wobbly_samples().tolist()})

_TABLES = {}


def table_for(name, resolution=4096):
    key = (name, resolution)
    if key not in _TABLES:
        _TABLES[key] = TrigTable(build_norm(SPECS[name]), resolution)
    return _TABLES[key]


@pytest.fixture(scope="session")
def euclid():
    return table_for("euclidean")


@pytest.fixture(scope="session")
def diag14():
    return table_for("diag14")


@pytest.fixture(scope="session")
def interp():
    return table_for("interp")


@pytest.fixture(scope="session")
def l4():
    return table_for("l4")


@pytest.fixture(params=["euclidean", "diag14", "skew", "l4", "interp", "samples"])
def any_table(request):
    return table_for(request.param)


SMOOTH = ["euclidean", "diag14", "skew", "interp"]


@pytest.fixture(params=SMOOTH)
def smooth_table(request):
    return table_for(request.param)
