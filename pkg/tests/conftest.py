import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture(scope="session")
def criterion(request):
    """criterion(n, name, ok, detail): records a check and fails the test when it does not hold."""
    store = request.config.stash[_RESULTS]

    def check(n, name, ok, detail=""):
        store.setdefault(n, []).append((name, bool(ok), detail))
        print(f"criterion {n} [{name}]: {'PASS' if ok else 'FAIL'} {detail}")
        return bool(ok)

    return check


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        checks = store[n]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        parts = "; ".join(f"{name} {'ok' if ok else 'FAILED'}" + (f" ({d})" if d else "")
                          for name, ok, d in checks)
        terminalreporter.write_line(f"criterion {n}: {verdict} - {parts}")
