import importlib

import pytest
from hypothesis import given, strategies as st

from gridgather import _purekernels as pure
from gridgather import kernels

try:
    from gridgather import _ckernels as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

cell_sets = st.sets(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), max_size=25)
NAMES = ("connected", "hole_free", "cut_cells", "has_destructible")


def test_backend_is_selected():
    assert kernels.BACKEND in ("python", "cython")
    if compiled is not None:
        assert kernels.BACKEND == "cython"


def test_pure_fallback_env(monkeypatch):
    monkeypatch.setenv("GRIDGATHER_PURE", "1")
    try:
        k = importlib.reload(kernels)
        assert k.BACKEND == "python"
    finally:
        monkeypatch.delenv("GRIDGATHER_PURE")
        importlib.reload(kernels)


@needs_compiled
@given(cell_sets)
def test_geometry_parity(s):
    for name in NAMES:
        if name != "hole_free" and not s:
            continue
        assert getattr(compiled, name)(s) == getattr(pure, name)(s), name


@needs_compiled
@pytest.mark.parametrize("n", range(1, 9))
def test_enumeration_parity(n):
    assert compiled.fixed_polyominoes(n) == pure.fixed_polyominoes(n)
    assert compiled.lemma_scan(n) == pure.lemma_scan(n)


def test_empty_inputs():
    for k in filter(None, (pure, compiled)):
        assert k.connected([]) is False
        assert k.hole_free([]) is True
        assert k.fixed_polyominoes(0) == []
