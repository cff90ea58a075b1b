import pathlib
import tomllib


def _get_version_from_pyproject() -> str:
    """
    Read and return the 'version' from pyproject.toml at the repository root.
    - Used when modnet-design runs from a source checkout without being installed.
    """
    project_root = pathlib.Path(__file__).resolve().parent.parent
    pyproject = project_root / "pyproject.toml"
    data = tomllib.loads(pyproject.read_text(encoding="utf-8"))
    if "project" in data and "version" in data["project"]:
        return data["project"]["version"]
    raise RuntimeError(f"Version not found in {pyproject}")
