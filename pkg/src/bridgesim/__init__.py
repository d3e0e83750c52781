"""Deterministic simulator and analysis toolkit for an optimistic
multi-party BTC bridge: chains, light-client predicates, presigned
transaction graphs, dispute games, stop-watch timing, peg-in/peg-out
protocol flow, and security-deposit economics."""

__version__ = "0.1.0"
