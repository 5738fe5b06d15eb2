"""riskdrive: a desk-scale testbed for risk-aware shielded driving.

A deterministic 2D driving simulator instrumented with runtime risk
cues fused into a single risk score, cue-specific action shields
arbitrated by a contextual bandit, risk-prioritized replay feeding a
small soft actor-critic learner, cyber-physical attack injectors, and
an evaluation harness with a live operator bridge.
"""

__version__ = "0.1.0"
