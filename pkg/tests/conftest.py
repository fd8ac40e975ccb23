from __future__ import annotations

import json
from pathlib import Path

import pytest

from fracsp.geometry import MushroomSpec, disk, make_mushroom, square

GOLDEN = Path(__file__).parent / "golden" / "goldens.json"

SJOHN = dict(r_list=(0.25, 0.125, 0.0625, 0.03125, 0.015625), sigma=1.5, h=1.0, side=2.0)
QHBC = dict(r_list=(0.25, 0.125, 0.0625), sigma=2.0, h=2.0, side=1.0)


@pytest.fixture(scope="session")
def goldens():
    return json.loads(GOLDEN.read_text())


@pytest.fixture(scope="session")
def unit_square():
    return square(1.0, x0=(0.5, 0.5))


@pytest.fixture(scope="session")
def unit_disk():
    return disk(1.0)


@pytest.fixture(scope="session")
def sjohn_mushroom():
    return make_mushroom(MushroomSpec(**SJOHN), x0=(1.0, 1.0))


@pytest.fixture(scope="session")
def qhbc_mushroom():
    return make_mushroom(MushroomSpec(**QHBC), x0=(0.5, 0.5))


CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_cli(command, config, out, *extra):
    """Run the command line in-process; ``config`` is a dict or a path."""
    from fracsp.cli import main

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(config, dict):
        path = out.parent / f"{out.name}.json"
        path.write_text(json.dumps(config))
    else:
        path = Path(config)
    code = main([command, str(path), "--output-dir", str(out), *extra])
    return code, out
