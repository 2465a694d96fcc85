"""Crowdsourced indoor incident reporting with a simulated patrol robot.

Pedestrians report obstacles and events (elevator outages, crowded
corridors); a patrol robot verifies the reports at semantic-map
checkpoints and publishes results over a shared file channel; verified
state feeds severity-graded route advisories for visually impaired
users, with a points ledger to keep reporters engaged.
"""

__version__ = "0.1.0"
