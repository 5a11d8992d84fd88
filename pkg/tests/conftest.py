import pytest

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and hasattr(item, "criterion_record"):
        rec = item.criterion_record
        rec["passed"] = rep.passed
        status = "PASS" if rep.passed else "FAIL"
        line = f"criterion {rec['id']:>2}: {status}  {rec['title']}"
        _ACCEPTANCE[rec["id"]] = (line, rec["details"])
        print(f"\n{line}")


@pytest.fixture
def criterion(request):
    """Recorder for an acceptance criterion; the PASS/FAIL line follows the test outcome."""

    class Recorder:
        def __init__(self):
            self.rec = {"id": None, "title": "", "details": []}
            request.node.criterion_record = self.rec

        def __call__(self, number, title):
            self.rec["id"], self.rec["title"] = number, title
            return self

        def check(self, label, value, tol, op="<="):
            ok = value <= tol if op == "<=" else value >= tol
            self.rec["details"].append(f"{label} = {value:.3e} ({op} {tol:g})")
            assert ok, f"{label} = {value:.3e} violates {op} {tol:g}"

    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        line, details = _ACCEPTANCE[key]
        terminalreporter.write_line(line)
        for d in details:
            terminalreporter.write_line(f"    {d}")
