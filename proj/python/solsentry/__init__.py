"""Python bindings for the solsentry Solidity analyzer."""

import json

from . import _core
from ._core import SolsentryError, canonical_condition, em_score, exact_match, pretty_print

__version__ = _core.__version__

__all__ = [
    "SolsentryError",
    "ast",
    "canonical_condition",
    "em_score",
    "exact_match",
    "pretty_print",
    "run_cli",
    "scan",
]


def scan(source, file_id="<input>", *, pragma_gate=True, mint_check=True, rules_dir=None):
    """Scan Solidity source text; returns a list of finding dicts."""
    return json.loads(_core.scan_json(source, file_id, pragma_gate, mint_check, rules_dir))


def ast(source, file_id="<input>"):
    """solc-style AST of the source as nested dicts."""
    return json.loads(_core.ast_json(source, file_id))


def run_cli(args):
    """Run the command line in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
