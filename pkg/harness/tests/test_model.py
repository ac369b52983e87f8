import numpy as np
import torch

from bcv_harness.model import MicroYolo, build_targets, decode, detection_loss, nms


def test_output_shape():
    model = MicroYolo(n_classes=4)
    raw = model(torch.zeros(2, 3, 128, 128))
    assert raw.shape == (2, 9, 8, 8)


def test_build_targets_places_center_cell():
    boxes = [np.array([[0.5, 0.25, 0.2, 0.1]], dtype=np.float32)]
    labels = [np.array([3])]
    obj, box_t, cls_t, positive = build_targets(boxes, labels, grid=4, n_classes=4)
    assert obj.sum() == 1
    assert obj[0, 1, 2] == 1.0  # cy=0.25 -> row 1, cx=0.5 -> col 2
    assert cls_t[0, 1, 2] == 3
    assert torch.allclose(box_t[0, :, 1, 2], torch.tensor([0.0, 0.0, 0.2, 0.1]))
    assert positive[0, 1, 2]


def test_decode_inverts_targets():
    raw = torch.full((9, 4, 4), -12.0)
    # one confident cell at (y=2, x=1), box offsets 0.5, w=0.25 h=0.5
    raw[4, 2, 1] = 12.0
    raw[0:2, 2, 1] = 0.0           # sigmoid -> 0.5
    raw[2, 2, 1] = torch.logit(torch.tensor(0.25))
    raw[3, 2, 1] = torch.logit(torch.tensor(0.5))
    raw[5:, 2, 1] = torch.tensor([0.0, 8.0, 0.0, 0.0])  # class 1
    dets = decode(raw, confidence_threshold=0.5)
    assert len(dets) == 1
    cls, conf, cx, cy, w, h = dets[0]
    assert cls == 1 and conf > 0.9
    assert abs(cx - 1.5 / 4) < 1e-6 and abs(cy - 2.5 / 4) < 1e-6
    assert abs(w - 0.25) < 1e-6 and abs(h - 0.5) < 1e-6


def test_nms_suppresses_same_class_only():
    a = (0, 0.9, 0.5, 0.5, 0.4, 0.4)
    b = (0, 0.8, 0.52, 0.5, 0.4, 0.4)   # heavy overlap, same class
    c = (1, 0.7, 0.5, 0.5, 0.4, 0.4)    # same box, other class
    kept = nms([a, b, c], iou_threshold=0.45)
    assert a in kept and c in kept and b not in kept


def test_single_batch_overfit():
    torch.manual_seed(0)
    model = MicroYolo(n_classes=2, width=8)
    optimizer = torch.optim.Adam(model.parameters(), lr=2e-3)
    images = torch.rand(4, 3, 64, 64)
    boxes = [np.array([[0.5, 0.5, 0.4, 0.4]], dtype=np.float32) for _ in range(4)]
    labels = [np.array([1]) for _ in range(4)]
    first = None
    for _ in range(60):
        optimizer.zero_grad()
        loss = detection_loss(model(images), boxes, labels, 2)
        if first is None:
            first = loss.item()
        loss.backward()
        optimizer.step()
    assert loss.item() < 0.5 * first
