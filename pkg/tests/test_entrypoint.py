import asyncio
import importlib.util
import inspect
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
PACKAGE_NAME = "xz3r0_pano_entry"


def _load_root_package():
    spec = importlib.util.spec_from_file_location(
        PACKAGE_NAME,
        ROOT / "__init__.py",
        submodule_search_locations=[str(ROOT)],
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules[PACKAGE_NAME] = module
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def root_package():
    yield _load_root_package()
    for name in list(sys.modules):
        if name == PACKAGE_NAME or name.startswith(f"{PACKAGE_NAME}."):
            del sys.modules[name]


def test_root_package_imports_without_host(root_package):
    assert inspect.iscoroutinefunction(root_package.comfy_entrypoint)
    assert f"{PACKAGE_NAME}.extension" not in sys.modules


def test_entrypoint_registers_panorama_nodes(root_package):
    pytest.importorskip("comfy_api")
    extension = asyncio.run(root_package.comfy_entrypoint())
    nodes = asyncio.run(extension.get_node_list())
    assert [node.__name__ for node in nodes] == [
        "XDepthEval",
        "XPanoC2E",
        "XPanoE2C",
        "XPanoYawRoll",
    ]
