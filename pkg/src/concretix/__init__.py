"""concretix: a dependency concretizer over an embedded logic engine."""

__version__ = "0.1.0"
