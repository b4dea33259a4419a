"""Decentralized emergency-coordination stack.

Identity-based signcryption over pluggable bilinear groups, a permissioned
event ledger with smart-contract style lifecycle, beacon-based neighbor
discovery with simulated short-range transports, an opportunistic-network
simulator, and a local HTTP gateway plus CLI tying it all together.
"""

__version__ = "0.1.0"
