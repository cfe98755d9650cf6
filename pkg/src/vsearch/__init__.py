"""Latency-aware vertical-search NLP stack.

Five query/document tasks (intent, tagging, auto-completion, suggestion,
ranking) over a synthetic professional-search world, plus the serving
strategies that keep them fast: unnormalized LM scoring, embedding
pre-computing, two-pass ranking, and parallel suggestion decoding.
"""

__version__ = "0.1.0"
