"""RoadNet test suite."""
