"""Shared test configuration.

Property tests run under a fixed hypothesis profile: no deadline (a few
checks do quadrature inside the property) and a moderate example budget so
the whole suite stays interactive.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "occulab",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("occulab")
