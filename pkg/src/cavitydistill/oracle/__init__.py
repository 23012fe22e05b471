"""Independent exact-evolution engine driven by ``.qps`` protocol scripts."""

from importlib import resources

from .runner import LogEntry, RunResult, run, run_script
from .script import Protocol, ScriptError, expand_symbolic, format_protocol, parse_script


def bundled_script(name: str) -> str:
    """Text of a script shipped in ``cavitydistill/oracle/scripts``."""
    return resources.files(__package__).joinpath("scripts", name).read_text()


def bundled_scripts() -> list[str]:
    return sorted(p.name for p in resources.files(__package__).joinpath("scripts").iterdir() if p.name.endswith(".qps"))
