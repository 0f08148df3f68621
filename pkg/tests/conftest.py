import pytest

import rehashmap

IMPLS = ["pure"] + (["compiled"] if rehashmap.HAVE_SPEEDUPS else [])


@pytest.fixture(params=IMPLS)
def impl(request):
    return request.param


@pytest.fixture
def make(impl):
    """Factory for a uint64-keyed table of the parametrized implementation."""
    def _make(initial_buckets=512, *, identity_hash=False, instrumented=True):
        return rehashmap.make_table(
            initial_buckets,
            impl=impl,
            identity_hash=identity_hash,
            instrumented=instrumented,
        )
    return _make
