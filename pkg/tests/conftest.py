import pytest


@pytest.fixture
def verdict(capsys, request):
    """Print one pass/fail line for an acceptance criterion, then assert it."""

    def emit(ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}")
        assert ok, detail

    return emit
