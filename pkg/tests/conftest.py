import pytest

from cavity_teleport import desk_defaults


@pytest.fixture
def desk():
    """Tabletop parameter set used across the suite."""
    return desk_defaults()
