"""bitcanvas: FPGA bitstreams as three-channel device images.

Parses configuration-frame payloads, maps frames to CLBs and slices, encodes
the result as an RGB device map, generates annotated detection datasets
(synthetic or from imported bitstream+placement pairs), and scores detector
predictions with IoU-thresholded AP/mAP.
"""

from .annotation import AnnotationFormat, BBoxAnnotation, PlacementRecord, placement_to_bbox
from .device import (
    BUILTIN_PROFILES,
    ColumnKind,
    ColumnSpec,
    DeviceProfile,
    FamilyParams,
    SliceKind,
    first_frame_index,
    load_builtin,
    load_profile,
    save_profile,
    synthetic_profile,
    total_fdri_frames,
)
from .errors import (
    AnnotationError,
    BitcanvasError,
    ContainerError,
    DatasetError,
    EvalError,
    ImageCodecError,
    ProfileError,
)
from .frames import (
    ContainerFormat,
    FrameArray,
    SliceConfig,
    extract_clb_bytes,
    extract_slice_bytes,
    parse_container,
    read_slice,
    synthesize_container,
)
from .image import (
    EncodedImage,
    PixelOrder,
    compression_ratio,
    encode_image,
    encode_slice,
    image_dims,
    read_image,
    write_image,
)
from .metrics import Detection, EvalReport, average_precision, evaluate, iou

__version__ = "0.1.0"
