import numpy as np
import pytest
from PIL import Image

from feature_adapter.cli import main
from feature_adapter.dump import AdapterConfig, dump_features

# the consuming pipeline's reader is the contract check
from partwise.featfile import read_feature_file

CFG = AdapterConfig(backbone="wide_resnet50_2", block=2, size=224, pretrained=False)


@pytest.fixture(scope="module")
def image_tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for rel in ("train/good/000.png", "train/good/001.png", "test/bent/000.png"):
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        arr = rng.integers(0, 256, (96, 96, 3)).astype(np.uint8)
        Image.fromarray(arr).save(path)
    return root


def test_dump_mirrors_paths_and_decodes(image_tree, tmp_path):
    out = tmp_path / "features"
    written = dump_features(image_tree, out, CFG, verbose=False)
    assert sorted(p.replace(str(out) + "/", "") for p in map(str, written)) == [
        "test/bent/000.cfm",
        "train/good/000.cfm",
        "train/good/001.cfm",
    ]
    fmap = read_feature_file(out / "train" / "good" / "000.cfm")
    assert fmap.dtype == np.float32
    assert np.all(np.isfinite(fmap))


def test_stride8_geometry_at_224(image_tree, tmp_path):
    # wide_resnet50_2 layer2 is the stride-8 stage: 224 -> 28x28
    out = tmp_path / "f224"
    dump_features(image_tree, out, CFG)
    fmap = read_feature_file(out / "train" / "good" / "000.cfm")
    assert fmap.shape[:2] == (28, 28)
    assert fmap.shape[2] == 512


def test_byte_deterministic_across_runs(image_tree, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    dump_features(image_tree, out_a, CFG)
    dump_features(image_tree, out_b, CFG)
    pa = out_a / "train" / "good" / "000.cfm"
    pb = out_b / "train" / "good" / "000.cfm"
    assert pa.read_bytes() == pb.read_bytes()


def test_cli_dump(image_tree, tmp_path):
    out = tmp_path / "cli_out"
    code = main(
        [
            "dump",
            "--backbone",
            "wide_resnet50_2",
            "--block",
            "2",
            "--in",
            str(image_tree),
            "--out",
            str(out),
            "--no-pretrained",
            "--quiet",
        ]
    )
    assert code == 0
    assert (out / "train" / "good" / "001.cfm").exists()


def test_unknown_backbone_fails_cleanly(image_tree, tmp_path):
    code = main(
        ["dump", "--backbone", "bogus", "--in", str(image_tree), "--out", str(tmp_path / "x")]
    )
    assert code == 2


def test_empty_tree_fails(tmp_path):
    code = main(
        ["dump", "--in", str(tmp_path / "none"), "--out", str(tmp_path / "o"), "--no-pretrained"]
    )
    assert code == 2
