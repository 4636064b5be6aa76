"""codeval: execution-based evaluation harness for LLM coding assistants."""

__version__ = "0.1.0"
