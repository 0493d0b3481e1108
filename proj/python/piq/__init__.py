"""Polynomial invariant synthesis for probabilistic loops.

Reports are the same JSON documents the ``piq`` tool writes with ``--json``,
decoded into dicts.
"""

import json

from ._core import (
    REPORT_SCHEMA,
    Error,
    ParseError,
    check_json,
    expected_invariant,
    gen_parametric,
    program_vars,
    run_cli,
    sdp_dump,
    synthesize_json,
    vc_dump,
)

__all__ = [
    "REPORT_SCHEMA",
    "Error",
    "ParseError",
    "check",
    "expected_invariant",
    "gen_parametric",
    "program_vars",
    "run_cli",
    "sdp_dump",
    "synthesize",
    "vc_dump",
]


def synthesize(source, **options):
    """Synthesize an invariant for the program text; returns the report dict.

    Keyword options mirror the command-line flags: degree, max_degree,
    mult_degree, truncate_eps, max_denominator, seed, mode, verify_samples,
    box_bound, literal_wp.
    """
    return json.loads(synthesize_json(source, **options))


def check(source, invariant, inner=None, **options):
    """Verify a candidate invariant (and inner invariant for nested loops)."""
    return json.loads(check_json(source, invariant, inner, **options))
