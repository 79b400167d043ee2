"""pelab: an LLM translation post-editing lab.

Run post-editing and zero-shot translation prompts against any
chat-completion endpoint (or a deterministic mock), parse the proposed
edits and improved translations out of the raw output, and evaluate with
TER/chrF/BLEU, span-edit efficacy over annotated error spans, quality-score
deltas, and a human edit-realization workflow.
"""

__version__ = "0.1.0"
