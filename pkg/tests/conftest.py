import pytest

_ACCEPTANCE: list[tuple[str, str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def log(criterion: str, label: str, ok: bool, detail: str = "", primary: bool = True):
        tag = criterion if primary else criterion + "+"
        _ACCEPTANCE.append((tag, label, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {tag} {label}: {detail}")
    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for tag, label, ok, detail in _ACCEPTANCE:
        tr.write_line(f"{'PASS' if ok else 'FAIL'} {tag:<4} {label}: {detail}")
    verdict: dict[str, bool] = {}
    for tag, _, ok, _ in _ACCEPTANCE:
        if not tag.endswith("+"):
            verdict[tag] = verdict.get(tag, True) and ok
    tr.write_line("")
    for tag in sorted(verdict, key=lambda t: int(t[1:])):
        tr.write_line(f"criterion {tag[1:]:>2}: {'PASS' if verdict[tag] else 'FAIL'}")
    tr.write_line("(lines tagged '+' are supplementary and do not enter the verdict)")
