import numpy as np
import pytest

from app.core.config import settings
from app.geometry.exact_core import matrix
from app.geometry.lambda_conditions import ShapeFamily, build_lambda
from app.geometry.symplectic_model import SympSpace
from app.schemas.geometry import family_from_document, read_document, surface_from_document


@pytest.fixture
def bundled_document():
    """
    Loader for the bundled JSON inputs by name.
    """
    return lambda name: read_document(settings.bundled_file(name))


@pytest.fixture
def parabola_document(bundled_document):
    return bundled_document("parabola")


@pytest.fixture
def parabola(parabola_document):
    """
    Sigma = {(x1, x2, 0, -x2^2/2)} in R^4.
    """
    return surface_from_document(parabola_document)


@pytest.fixture
def parabola_family(parabola_document):
    return family_from_document(parabola_document)


@pytest.fixture
def r8_document(bundled_document):
    return bundled_document("r8_example")


@pytest.fixture
def r8_surface(r8_document):
    """
    The R^8 surface with A_3 A_4 = -A_4 A_3 = A_2.
    """
    return surface_from_document(r8_document)


@pytest.fixture
def r8_family(bundled_document):
    return family_from_document(bundled_document("r8_shape_family"))


@pytest.fixture
def zero_family():
    """
    All shape operators zero: the tangent plane itself.
    """
    space = SympSpace.create(1, 1)
    zero = matrix([[0, 0], [0, 0]])
    return ShapeFamily.create(space, [zero, zero])


@pytest.fixture
def nonflat_products_zero_family():
    """
    n = 2, p = 1 with C_i = [[0, S_i], [0, 0]]: every product vanishes but the
    curvature does not.
    """
    space = SympSpace.create(2, 1)
    C1 = matrix([[0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    C2 = matrix([[0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0]])
    return ShapeFamily.create(space, [C1, C2])


@pytest.fixture
def parabola_lambda(parabola_family):
    return build_lambda(parabola_family)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def eager_celery():
    """
    Run verification chunks in-process for the duration of a test.
    """
    original = settings.CELERY_TASK_ALWAYS_EAGER
    settings.CELERY_TASK_ALWAYS_EAGER = True
    yield settings
    settings.CELERY_TASK_ALWAYS_EAGER = original


@pytest.fixture
def small_chunks():
    original = settings.CHUNK_SIZE
    settings.CHUNK_SIZE = 3
    yield settings
    settings.CHUNK_SIZE = original
