import pytest
import torch

from dcnn_harness import TileDataset, load_tile_table
from dcnn_harness.data import load_tile_image


def test_sidecar_table(tiles_dir):
    records = load_tile_table(tiles_dir)
    assert len(records) == 192
    assert {r.category for r in records} == {0, 1}
    assert {r.split for r in records} == {"train", "val", "test"}


def test_sidecar_schema_enforced(tiles_dir, tmp_path):
    src = (tiles_dir / "tiles.csv").read_text().splitlines()
    src[0] = "# schema: figground/tiles/99"
    bad = tmp_path / "tiles.csv"
    bad.write_text("\n".join(src) + "\n")
    with pytest.raises(ValueError, match="schema"):
        load_tile_table(tmp_path)


def test_dataset_split_and_shape(tiles_dir):
    train = TileDataset(tiles_dir, split="train")
    test = TileDataset(tiles_dir, split="test")
    assert len(train) > len(test) > 0
    x, y = train[0]
    assert x.shape == (3, 80, 80)
    assert x.dtype == torch.float32
    assert y in (0, 1)
    # all three channels replicate the same grayscale tile
    assert torch.equal(x[0], x[1]) and torch.equal(x[1], x[2])


def test_image_polarity_buildings_are_signal(tiles_dir):
    records = load_tile_table(tiles_dir)
    dense_id = next(r.tile_id for r in records if r.category == 0)
    arr = load_tile_image(tiles_dir, dense_id, 80)
    assert 0.0 <= arr.min() and arr.max() <= 1.0
    assert (arr > 0.5).mean() > 0.05  # a dense tile has plenty of building pixels


def test_missing_image_raises(tiles_dir):
    with pytest.raises(FileNotFoundError):
        load_tile_image(tiles_dir, "no-such-tile", 80)
