import pytest

from canonsys import errors
from canonsys.config import DEFAULTS, default


def test_defaults_table():
    assert default("quad_order") == 8
    assert DEFAULTS["classify_schedule"] == (5, 10, 20, 40)
    assert DEFAULTS["classify_rel_tol"] == 1e-6
    with pytest.raises(KeyError):
        default("nope")


def test_error_hierarchy():
    classes = [v for v in vars(errors).values() if isinstance(v, type) and issubclass(v, Exception)]
    assert len(classes) >= 12
    for cls in classes:
        assert issubclass(cls, errors.CanonicalSystemError)
        assert issubclass(cls, ValueError)
