from __future__ import annotations

import tomllib
from pathlib import Path


def test_pyproject_defines_core_dependencies_and_entry_point():
    pyproject = tomllib.loads(Path("pyproject.toml").read_text(encoding="utf-8"))
    readme = Path("README.md").read_text(encoding="utf-8")

    project = pyproject["project"]
    dependencies = set(project["dependencies"])
    optional_dependencies = project["optional-dependencies"]

    assert project["name"] == "subcash-reserves"
    assert {"pandas>=1.5.0", "numpy>=1.23.0", "scipy>=1.10.0"} <= dependencies
    assert "pytest>=7.2.0" not in dependencies
    assert "pytest>=7.2.0" in optional_dependencies["dev"]
    assert "pytest>=7.2.0" in optional_dependencies["ci"]

    assert project["scripts"]["subcash"] == "subcash.cli.main:main"
    assert pyproject["tool"]["setuptools"]["py-modules"] == ["config"]

    assert 'python -m pip install -e ".[dev]"' in readme
    assert "docs/scenario_format.md" in readme
