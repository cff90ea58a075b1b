# modnet/__init__.py
"""
modnet-design: integrated Mobility-on-Demand and transit network design.

The package chooses transit lines, their frequencies and the MoD fleet per
zone under bus and vehicle budgets, assigning travellers with a
frequency-based hyperpath model. Entry points for scripting are
`modnet.services` (file-level workflows) and `modnet.benders.run_method`.
"""
from importlib.metadata import PackageNotFoundError, version

DISTRIBUTION = "modnet-design"

try:
    __version__ = version(DISTRIBUTION)
except PackageNotFoundError:
    # Source checkout without an installed distribution.
    from .get_version import _get_version_from_pyproject
    __version__ = _get_version_from_pyproject()

__all__ = ["DISTRIBUTION", "__version__"]
