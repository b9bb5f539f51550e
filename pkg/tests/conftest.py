import numpy as np
import pytest

from raredetect import Chimeric, DetectionModel, NormalShift, ShapeFunction


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chim(beta=0.75, r=0.5, n=1e4, shape=None, **kw):
    kw.setdefault("signal", Chimeric(shape or ShapeFunction.constant()))
    return DetectionModel(n=n, beta=beta, r=r, **kw)


def norm(beta=0.75, r=0.3, n=1e4, sigma0=1.0, **kw):
    return DetectionModel(n=n, beta=beta, r=r, signal=NormalShift(sigma0), **kw)
