"""airsteward: deterministic household air-system steward.

Utterance tag extraction, household profile memory, a rule-based
planner with explicit reasoning chains, a semi-stream parser, a 25-rule
weighted evaluator, a closed-loop indoor simulator, and an HTTP/CLI
surface tying them together.
"""

__version__ = "0.1.0"
