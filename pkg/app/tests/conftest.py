import numpy as np
import pytest

from app.models.space import INF, MeasureSpace, SpaceDescriptor
from app.services.LinearProgramService import LinearProgramService
from app.services.OperatorService import OperatorService
from app.services.RegularityService import RegularityService
from app.services.SpaceService import SpaceService
from app.services.StableEmbeddingService import StableEmbeddingService
from app.services.VectorMeasureService import VectorMeasureService
from app.services.WeightProgramService import WeightProgramService
from app.services.WeightSynthesisService import WeightSynthesisService


@pytest.fixture
def spaces():
    return SpaceService()


@pytest.fixture
def operators(spaces):
    return OperatorService(spaces)


@pytest.fixture
def lp():
    return LinearProgramService()


@pytest.fixture
def synthesis(operators, lp):
    return WeightSynthesisService(operators, lp, max_cuts=80, verify_batch=500, bisection_steps=30, budget=4)


@pytest.fixture
def regularity(synthesis):
    return RegularityService(synthesis)


@pytest.fixture
def programs(synthesis):
    return WeightProgramService(synthesis, truncation=8)


@pytest.fixture
def vector_measures(programs):
    return VectorMeasureService(programs)


@pytest.fixture
def embeddings(lp, spaces):
    return StableEmbeddingService(lp, spaces)


@pytest.fixture
def probability4():
    return MeasureSpace.uniform(4)


@pytest.fixture
def weighted_l3():
    return SpaceDescriptor(MeasureSpace(np.array([0.5, 1.0, 2.0])), 3.0, np.array([1.0, 2.0, 0.5]))


@pytest.fixture
def linf_probability8():
    return SpaceDescriptor(MeasureSpace.uniform(8), INF)
