import pytest

from swapqkd.protocol import ProtocolConfig, Strategy


@pytest.fixture
def honest_config():
    return ProtocolConfig()


@pytest.fixture
def attack_config():
    return ProtocolConfig(strategy=Strategy.SWAP_ATTACK)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip("."))):
        terminalreporter.write_line(line)
