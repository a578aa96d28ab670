import re

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_outcomes = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        props = dict(report.user_properties)
        _outcomes[int(m.group(1))] = (report.outcome, props.get("detail", ""), props.get("table"))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        outcome, detail, _ = _outcomes[n]
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        tr.write_line(f"criterion {n:>2}: {status}  {detail}".rstrip())
    for n in sorted(_outcomes):
        table = _outcomes[n][2]
        if table:
            tr.write_line("")
            tr.write_line(f"criterion {n} table")
            for line in table.splitlines():
                tr.write_line(line)
