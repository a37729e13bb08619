"""Shared fixtures plus the acceptance summary banner."""

import json
import re

import pytest

_ACCEPTANCE_RE = re.compile(r"test_(\d{2})_")
_acceptance_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if "test_acceptance.py" not in str(item.fspath):
        return
    match = _ACCEPTANCE_RE.search(item.name)
    if match is None:
        return
    num = match.group(1)
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if report.when == "call":
        _acceptance_results[num] = (doc, "PASS" if report.passed else "FAIL")
    elif report.when == "setup" and not report.passed:
        _acceptance_results[num] = (doc, "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance_results):
        doc, status = _acceptance_results[num]
        terminalreporter.write_line(f"ACCEPTANCE {num} {status}  {doc}")


@pytest.fixture
def cli(tmp_path):
    """Run the command-line entry point into a fresh output directory.

    Returns (exit_code, outdir); pass out=None to let the tool pick/require its own.
    """
    from detgraph.cli import main

    counter = [0]

    def run(*argv, out="auto"):
        argv = [str(a) for a in argv]
        if out == "auto":
            counter[0] += 1
            outdir = tmp_path / f"run{counter[0]}"
            argv += ["--out", str(outdir)]
        else:
            outdir = None if out is None else tmp_path / out
            if outdir is not None:
                argv += ["--out", str(outdir)]
        code = main(argv)
        return code, outdir

    return run


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def manifest_core(outdir):
    """Manifest contents with the only wall-clock field removed."""
    data = read_json(outdir / "manifest.json")
    data.pop("wall_time_s", None)
    return data


def dir_snapshot(outdir):
    """Bytes of every artifact, with the manifest normalized for comparison."""
    snap = {}
    for p in sorted(outdir.iterdir()):
        if p.name == "manifest.json":
            snap[p.name] = json.dumps(manifest_core(outdir), sort_keys=True)
        else:
            snap[p.name] = p.read_bytes()
    return snap
