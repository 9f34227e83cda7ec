"""qnetrl: tiered quantum-network simulator with multi-agent RL offloading.

The package models a mobile/edge/cloud network whose nodes run quantum
autoencoder workloads, and trains independent actor-critic agents to decide
where (and how much of) each task to offload under QKD key, entangled-pair
and qubit constraints.
"""

__version__ = "0.1.0"
