"""Shared pytest hooks: a terminal summary for the acceptance criteria.

Each acceptance test records a "criterion" property (its number and
name) and a "detail" property (measured values) via record_property;
this hook prints one PASS/FAIL line per criterion after the run.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call":
                continue
            props = dict(getattr(rep, "user_properties", []) or [])
            if "criterion" in props:
                rows.append((props["criterion"], props.get("detail", ""), status))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, detail, status in sorted(rows):
        word = "PASS" if status == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {name}: {word} {detail}".rstrip())
