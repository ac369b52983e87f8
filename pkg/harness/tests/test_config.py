import pytest

from bcv_harness.config import HarnessConfig, HarnessError


def test_defaults(tmp_path):
    config = HarnessConfig(dataset_dir=str(tmp_path))
    assert config.input_size == 416
    assert config.confidence_threshold == 0.5
    assert config.nms_iou == 0.45
    assert config.backend == "micro-yolo"
    config.validate()


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"input_size": 0}, "input_size"),
        ({"input_size": 100}, "multiple of 16"),
        ({"confidence_threshold": 0.0}, "confidence"),
        ({"confidence_threshold": 1.0}, "confidence"),
        ({"nms_iou": 1.5}, "nms_iou"),
        ({"epochs": 0}, "epochs"),
        ({"batch_size": 0}, "batch_size"),
    ],
)
def test_validation_rejects(tmp_path, kwargs, match):
    config = HarnessConfig(dataset_dir=str(tmp_path), **kwargs)
    with pytest.raises(HarnessError, match=match):
        config.validate()


def test_missing_dataset_dir_rejected(tmp_path):
    config = HarnessConfig(dataset_dir=str(tmp_path / "nope"))
    with pytest.raises(HarnessError, match="dataset dir"):
        config.validate()
