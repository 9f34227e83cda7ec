import os
import sys

from hypothesis import HealthCheck, settings

# oracle helpers live next to the tests
sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")
