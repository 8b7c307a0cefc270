"""Session fixtures: tiles come from the figure-ground pipeline's CLI (the
hand-off interface), never from importing it."""

import subprocess
import sys

import pytest

from dcnn_harness import TrainProtocol, train_model

SYNTH_CONFIG = """\
out_dir = {out}
seed = 29
synth_classes = dense, sparse
synth.dense.shapes = rectangle
synth.dense.size_range = 40, 60
synth.dense.spacing_m = 16
synth.dense.jitter_m = 1
synth.dense.orientation = street
synth.sparse.shapes = L, cross
synth.sparse.size_range = 200, 400
synth.sparse.spacing_m = 62
synth.sparse.jitter_m = 4
synth.sparse.orientation = scattered
synth_tiles_per_class = 96
"""


@pytest.fixture(scope="session")
def tiles_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiles")
    cfg = root / "synth.cfg"
    cfg.write_text(SYNTH_CONFIG.format(out=root / "out"), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "figground.cli", "synth", "--config", str(cfg)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, f"tile export failed: {proc.stderr}"
    return root / "out" / "tiles"


@pytest.fixture(scope="session")
def desk_run(tiles_dir, tmp_path_factory):
    """One reduced-protocol training run shared by every test that needs a
    trained model: 10 epochs on the synthetic two-class export."""
    out = tmp_path_factory.mktemp("desk_run")
    protocol = TrainProtocol(epochs=10, seed=0)
    model, history = train_model(tiles_dir, protocol, out_dir=out)
    return {"model": model, "history": history, "out": out, "protocol": protocol}
