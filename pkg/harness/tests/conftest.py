import json
import subprocess
import sys
from pathlib import Path

import pytest

from bcv_harness.config import HarnessConfig
from bcv_harness.train import train

CLASSES = "aes,md5,rc4,sha256"


def bcv(*args: str) -> None:
    cmd = [sys.executable, "-m", "bitcanvas", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"{' '.join(cmd)} failed:\n{proc.stderr}"


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory) -> dict:
    """250-image 4-class synthetic corpus (200 train / 50 test), built via the
    primary CLI only."""
    root = tmp_path_factory.mktemp("toy")
    profile = root / "prof.json"
    bcv("synth", "profile", "--family", "zynq7000-family", "--rows", "1",
        "--clb-cols", "16", "--non-clb", "2", "--seed", "42", "--out", str(profile))
    corpus = root / "corpus"
    bcv("synth", "dataset", "--profile", str(profile), "--out", str(corpus),
        "--count", "250", "--seed", "7", "--classes", CLASSES, "--blocks", "1:3")
    data = root / "data"
    bcv("dataset", "build", "--manifest", str(corpus / "manifest.json"),
        "--out", str(data), "--order", "chw", "--jobs", "4")
    return {"root": root, "corpus": corpus, "data": data}


@pytest.fixture(scope="session")
def ordering_datasets(toy_dataset) -> dict[str, Path]:
    """The same corpus rendered under all three pixel orders."""
    out = {"chw": toy_dataset["data"]}
    manifest = toy_dataset["corpus"] / "manifest.json"
    for order in ("hwc", "cwh"):
        data = toy_dataset["root"] / f"data_{order}"
        bcv("dataset", "build", "--manifest", str(manifest),
            "--out", str(data), "--order", order, "--jobs", "4")
        out[order] = data
    return out


@pytest.fixture(scope="session")
def trained(toy_dataset) -> dict:
    """The main toy-run model: 100 epochs at 192 px."""
    config = HarnessConfig(
        dataset_dir=str(toy_dataset["data"]), input_size=192, epochs=100, seed=0
    )
    run_dir = toy_dataset["root"] / "run_main"
    model_path = train(config, run_dir)
    run_log = json.loads((run_dir / "run.json").read_text())
    return {"model": model_path, "config": config, "run_dir": run_dir, "log": run_log}
