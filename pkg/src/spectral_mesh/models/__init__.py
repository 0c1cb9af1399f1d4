"""Closed-form model problems: rotating string, alpha^2-dynamo, branch-point fixture."""
