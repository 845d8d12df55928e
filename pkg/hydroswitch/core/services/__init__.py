"""Run orchestration on top of the numerical core."""
