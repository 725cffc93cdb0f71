STATUS = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for status, label in STATUS.items():
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            when = getattr(rep, "when", "call")
            if status != "skipped" and when != "call":
                continue
            name = nodeid.split("::")[-1].removeprefix("test_").replace("_", "-")
            lines[name] = label
    if lines:
        terminalreporter.write_line("")
        for name in sorted(lines):
            terminalreporter.write_line(f"ACCEPTANCE {name}: {lines[name]}")
